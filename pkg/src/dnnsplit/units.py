"""Unit conventions and conversions used across the package.

Canonical internal units: time in seconds, data in bits, compute work in
mega-multiplications (MM), link rates in bit/s, node rates in MM/s.
Human-facing quantities (model tables, node memory, radio rates) use KB,
MB and Mbps; every conversion goes through the helpers below so the
KB=1024 B / MB=1000 KB convention lives in exactly one place.
"""

BITS_PER_BYTE = 8
BYTES_PER_KB = 1024
KB_PER_MB = 1000

BITS_PER_KB = BITS_PER_BYTE * BYTES_PER_KB
BPS_PER_MBPS = 1_000_000.0


def kb_to_bits(kb: float) -> float:
    return kb * BITS_PER_KB


def bits_to_kb(bits: float) -> float:
    return bits / BITS_PER_KB


def mb_to_kb(mb: float) -> float:
    return mb * KB_PER_MB


def mbps_to_bps(mbps: float) -> float:
    return mbps * BPS_PER_MBPS
