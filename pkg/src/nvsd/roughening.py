"""Roughening: the inverse of smoothing, applied to the working response.

Two variants, both operating on a response already ordered by the
predictor being roughened:

* ``dcol_gradient`` -- one ascent step on ``S``.  For the ordered
  response the step is ``y + theta * L y`` where ``L`` is the path-graph
  Laplacian, i.e. ``y_1 (1 + theta) - theta y_2`` at the ends and
  ``y_i (1 + 2 theta) - theta (y_{i-1} + y_{i+1})`` inside.
* ``smoother`` -- push each point away from a fitted curve,
  ``y + theta (y - y_smooth)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSampleError
from .smoothing import fit_smoothing_spline

__all__ = [
    "RougheningConfig",
    "SmootherSpec",
    "fit_smoother",
    "grad_s_delta",
    "roughen",
    "roughen_dcol",
    "roughen_smoother",
]

DCOL_GRADIENT = "dcol_gradient"
SMOOTHER = "smoother"
_MODES = (DCOL_GRADIENT, SMOOTHER)


@dataclass(frozen=True)
class SmootherSpec:
    """Univariate smoother settings.

    ``penalty=None`` selects the spline penalty by GCV on every fit.
    """

    penalty: float | None = None
    min_points: int = 4


@dataclass(frozen=True)
class RougheningConfig:
    theta: float = 0.01
    mode: str = DCOL_GRADIENT
    smoother: SmootherSpec = field(default_factory=SmootherSpec)

    def __post_init__(self):
        if not 0.0 < self.theta <= 1.0:
            raise ValueError(f"theta must lie in (0, 1], got {self.theta}")
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}, got {self.mode!r}")


def _vector(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise InvalidSampleError("expected a one-dimensional response")
    if y.size < 3:
        raise InvalidSampleError(f"need at least 3 observations, got {y.size}")
    return y


def _laplacian_apply(y: np.ndarray) -> np.ndarray:
    out = np.empty_like(y)
    out[0] = y[0] - y[1]
    out[-1] = y[-1] - y[-2]
    out[1:-1] = 2.0 * y[1:-1] - y[:-2] - y[2:]
    return out


def grad_s_delta(y_sorted) -> np.ndarray:
    """Gradient of ``S`` with respect to the ordered response.

    >>> grad_s_delta([1.0, 2.0, 3.0]).tolist()
    [-1.0, 0.0, 1.0]
    """
    y = _vector(y_sorted)
    return _laplacian_apply(y) / (y.size - 2)


def roughen_dcol(y_sorted, theta: float) -> np.ndarray:
    """One DCOL roughening step (``1/(n-2)`` absorbed into ``theta``)."""
    y = _vector(y_sorted)
    return y + theta * _laplacian_apply(y)


def fit_smoother(x_sorted, y_sorted, spec: SmootherSpec | None = None) -> np.ndarray:
    """Smoothed response at each observation (cubic smoothing spline)."""
    spec = spec or SmootherSpec()
    spline = fit_smoothing_spline(x_sorted, y_sorted, lam=spec.penalty, min_points=spec.min_points)
    return spline(x_sorted)


def roughen_smoother(x_sorted, y_sorted, theta: float, spec: SmootherSpec | None = None) -> np.ndarray:
    """Move each point away from the smoothed curve by ``theta`` times its residual."""
    y = np.asarray(y_sorted, dtype=float)
    fitted = fit_smoother(x_sorted, y, spec)
    return y + theta * (y - fitted)


def roughen(x, y, cfg: RougheningConfig, order: np.ndarray | None = None) -> np.ndarray:
    """Roughen ``y`` along predictor ``x``; result is in the original row order.

    ``order`` may pass a precomputed stable argsort of ``x``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if order is None:
        order = np.argsort(x, kind="stable")
    ys = y[order]
    if cfg.mode == DCOL_GRADIENT:
        new = roughen_dcol(ys, cfg.theta)
    else:
        new = roughen_smoother(x[order], ys, cfg.theta, cfg.smoother)
    out = np.empty_like(y)
    out[order] = new
    return out
