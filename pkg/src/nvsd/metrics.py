from __future__ import annotations

import numpy as np

from .errors import DegenerateResponseError, InvalidSampleError


def iqr(y) -> float:
    """Interquartile range with linear interpolation between order statistics."""
    q75, q25 = np.percentile(np.asarray(y, dtype=float), [75, 25], method="linear")
    return float(q75 - q25)


def nrmse(y_true, y_pred) -> float:
    """Root mean squared error divided by the IQR of ``y_true``."""
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise InvalidSampleError("y_true and y_pred must be 1-D and the same length")
    if y_true.size < 2:
        raise InvalidSampleError("nrmse needs at least 2 observations")
    spread = iqr(y_true)
    if spread <= 0.0:
        raise DegenerateResponseError("IQR of y_true is zero")
    r = y_pred - y_true
    return float(np.sqrt(r @ r / r.size) / spread)
