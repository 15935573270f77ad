"""Minimal deterministic SVG writer (no plotting dependency).

All numbers go through :func:`num` so identical inputs give identical bytes.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape, quoteattr

FONT = "DejaVu Sans, Arial, sans-serif"


def num(x: float) -> str:
    """Shortest round-trip text for ``x`` with integral values printed without ``.0``."""
    x = float(x)
    if x == 0:
        return "0"
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def fixed(x: float, digits: int = 3) -> str:
    s = f"{x:.{digits}f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def attrs(**kw) -> str:
    out = []
    for key, value in kw.items():
        if value is None:
            continue
        key = key.rstrip("_").replace("__", ":").replace("_", "-")
        if isinstance(value, float):
            value = fixed(value)
        out.append(f"{key}={quoteattr(str(value))}")
    return " ".join(out)


def element(tag: str, text: str | None = None, **kw) -> str:
    a = attrs(**kw)
    head = f"<{tag} {a}" if a else f"<{tag}"
    if text is None:
        return head + "/>"
    return f"{head}>{escape(text)}</{tag}>"


def document(width: float, height: float, body: list[str], view_box: str | None = None) -> str:
    vb = view_box or f"0 0 {fixed(width)} {fixed(height)}"
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{fixed(width)}" height="{fixed(height)}" viewBox="{vb}">',
        *body,
        "</svg>",
        "",
    ]
    return "\n".join(lines)


def nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    """Round tick positions covering ``[lo, hi]``."""
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return []
    if hi <= lo:
        pad = abs(lo) * 0.1 or 1.0
        lo, hi = lo - pad, hi + pad
    raw = (hi - lo) / target
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.floor(lo / step) * step
    ticks = []
    k = 0
    while True:
        t = start + k * step
        if t > hi + step * 1e-9:
            ticks.append(round(t, 12))
            break
        ticks.append(round(t, 12))
        k += 1
    return ticks
