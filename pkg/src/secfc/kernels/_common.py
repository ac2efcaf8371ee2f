M61 = (1 << 61) - 1
MAX_MODULUS = 1 << 62

MODE_M61 = 0
MODE_SMALL = 1
MODE_GENERIC = 2


def modulus_mode(q):
    """Pick the multiplication strategy for modulus ``q``."""
    if q == M61:
        return MODE_M61
    if q < 1 << 32:
        return MODE_SMALL
    if q >= MAX_MODULUS:
        raise ValueError(f"modulus {q} exceeds 2**62")
    return MODE_GENERIC
