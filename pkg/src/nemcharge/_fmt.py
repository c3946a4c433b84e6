"""Float formatting shared by every CSV/JSON emitter (9 significant digits)."""


def fmt9(x: float) -> str:
    return format(float(x), ".9g")
