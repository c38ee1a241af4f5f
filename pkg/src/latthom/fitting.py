"""Least-squares power-law fits on log-log data."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

# points whose standard error exceeds this fraction of the value are flagged
MAX_RELATIVE_STDERR = 0.2


class DegenerateData(ValueError):
    """Too few points, or values that admit no logarithm (zero, negative, NaN)."""


@dataclass(frozen=True)
class ScalingFit:
    x: tuple
    y: tuple
    stderr: tuple
    slope: float
    intercept: float
    residual: float
    log_power: float | None = None
    flagged: bool = False

    def in_window(self, lo: float, hi: float) -> bool:
        return lo <= self.slope <= hi

    def to_dict(self) -> dict:
        out = asdict(self)
        for k in ("x", "y", "stderr"):
            out[k] = list(out[k])
        return out


def fit_scaling(x, y, stderr=None, log_correction: bool = False) -> ScalingFit:
    """Ordinary least squares of ``ln y`` on ``ln x``.

    With ``log_correction`` an extra regressor ``ln ln x`` absorbs a
    logarithmic factor ``(ln x)^q``; ``log_power`` holds ``q``.
    ``residual`` is the root-mean-square of the fit residuals in log space.

    Raises
    ------
    DegenerateData
        If fewer than two points (three with ``log_correction``) are given or
        any value is not strictly positive.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    se = np.zeros_like(y) if stderr is None else np.asarray(stderr, dtype=float)
    need = 3 if log_correction else 2
    if x.size < need or x.size != y.size:
        raise DegenerateData(f"need at least {need} matched points, got {x.size}")
    if not (np.all(np.isfinite(y)) and np.all(y > 0) and np.all(x > 0)):
        raise DegenerateData("log-log fit needs strictly positive finite values")
    if np.unique(x).size < need:
        raise DegenerateData("abscissae are not distinct")
    lx, ly = np.log(x), np.log(y)
    cols = [lx, np.ones_like(lx)]
    if log_correction:
        if np.any(x <= 1):
            raise DegenerateData("log correction needs x > 1")
        cols.insert(1, np.log(lx))
    X = np.stack(cols, axis=1)
    coef, *_ = np.linalg.lstsq(X, ly, rcond=None)
    resid = float(np.sqrt(np.mean((X @ coef - ly) ** 2)))
    flagged = bool(np.any(se > MAX_RELATIVE_STDERR * y))
    return ScalingFit(
        tuple(x.tolist()), tuple(y.tolist()), tuple(se.tolist()),
        float(coef[0]), float(coef[-1]), resid,
        float(coef[1]) if log_correction else None, flagged,
    )


def loglog_slope(x, y) -> float:
    """Plain OLS slope of ``ln y`` against ``ln x``."""
    return fit_scaling(x, y).slope
