"""Plain-text series and weights files: one decimal number per line."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..dp import ChangepointWeights, as_series
from ..errors import ContractViolation, ParseError

HEADER = "value"


def _read_numbers(path: Path) -> list[float]:
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if lineno == 1 and line == HEADER:
                continue
            try:
                v = float(line)
            except ValueError:
                raise ParseError(path, lineno, f"not a number: {line!r}") from None
            if not np.isfinite(v):
                raise ParseError(path, lineno, f"value is not finite: {line!r}")
            values.append(v)
    return values


def load_series(path) -> np.ndarray:
    """Read a series file; an optional first line ``value`` is skipped."""
    path = Path(path)
    values = _read_numbers(path)
    if not values:
        raise ContractViolation(f"{path}: series file holds no values")
    return as_series(values)


def save_series(path, x) -> None:
    """Write one value per line with 17 significant digits (exact round trip)."""
    x = as_series(x)
    text = "".join(f"{v:.17g}\n" for v in x)
    Path(path).write_text(text, encoding="utf-8")


def load_weights(path, n: int, m: int) -> ChangepointWeights:
    """Read per-step weights: n positive values, the last equal to 1."""
    path = Path(path)
    w = _read_numbers(path)
    if len(w) != n:
        raise ContractViolation(f"{path}: expected {n} weights, found {len(w)}")
    if any(v <= 0 for v in w):
        raise ContractViolation(f"{path}: weights must be positive")
    if w[-1] != 1.0:
        raise ContractViolation(f"{path}: the last weight must be 1")
    return ChangepointWeights.from_weights(w, m)
