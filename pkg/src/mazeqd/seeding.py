import hashlib


def derive_seed(base, *parts) -> int:
    """Stable 63-bit child seed from a base seed and any labels (position-based, not schedule-based)."""
    key = "|".join(str(p) for p in (base, *parts)).encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little") >> 1
