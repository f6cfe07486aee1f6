"""Additive prediction model over selected variables, fit by backfitting.

Each component is a cubic smoothing spline.  Penalties are chosen by GCV
during the first few sweeps and then frozen, so the later sweeps are
Gauss-Seidel iterations of a fixed linear smoother and converge.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import Dataset
from .errors import FitError, SchemaError
from .smoothing import SmoothingSpline, fit_smoothing_spline

__all__ = ["AdditiveModel", "fit_additive", "predict", "load_model", "save_model"]

MODEL_FORMAT = "nvsd-additive-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class AdditiveModel:
    intercept: float
    components: tuple[SmoothingSpline, ...]
    variables: tuple[str, ...]
    sweeps: int = 0
    converged: bool = True

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "intercept": float(self.intercept),
            "sweeps": int(self.sweeps),
            "converged": bool(self.converged),
            "components": [
                {
                    "variable": name,
                    "knots": [float(v) for v in comp.knots],
                    "values": [float(v) for v in comp.values],
                    "penalty": None if not np.isfinite(comp.lam) else float(comp.lam),
                    "edf": float(comp.edf),
                }
                for name, comp in zip(self.variables, self.components)
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "AdditiveModel":
        if doc.get("format") != MODEL_FORMAT:
            raise SchemaError(f"not an {MODEL_FORMAT} document")
        if doc.get("version") != MODEL_VERSION:
            raise SchemaError(f"unsupported model version {doc.get('version')!r}")
        try:
            comps = tuple(
                SmoothingSpline(
                    np.asarray(c["knots"], dtype=float),
                    np.asarray(c["values"], dtype=float),
                    np.inf if c.get("penalty") is None else float(c["penalty"]),
                    float(c.get("edf", np.nan)),
                )
                for c in doc["components"]
            )
            names = tuple(str(c["variable"]) for c in doc["components"])
            return cls(float(doc["intercept"]), comps, names, int(doc.get("sweeps", 0)),
                       bool(doc.get("converged", True)))
        except KeyError as exc:
            raise SchemaError(f"model document missing field {exc}") from None


def fit_additive(
    d: Dataset,
    variables: Sequence | None = None,
    *,
    penalty: float | None = None,
    tol: float = 1e-6,
    max_sweeps: int = 100,
    gcv_sweeps: int = 3,
    min_rows: int = 10,
) -> AdditiveModel:
    """Backfit ``y = intercept + sum_j f_j(x_j)``.

    Parameters
    ----------
    d : Dataset
    variables : sequence of names or indices, optional
        Columns to use; all columns when omitted.
    penalty : float, optional
        Fixed spline penalty for every component; ``None`` uses GCV.
    tol : float
        Stop when no component changes by more than this between sweeps.
    max_sweeps : int
    gcv_sweeps : int
        Number of initial sweeps during which penalties are re-chosen.
    """
    cols = list(range(d.p)) if variables is None else [d.column_index(v) for v in variables]
    if not cols:
        raise FitError("no variables to fit; use the response mean instead")
    if d.n < min_rows:
        raise FitError(f"need at least {min_rows} rows, got {d.n}")

    X = d.predictors[:, cols]
    y = d.response
    k = len(cols)
    intercept = float(y.mean())
    fitted = np.zeros((d.n, k))
    comps: list[SmoothingSpline | None] = [None] * k
    lams: list[float | None] = [penalty] * k
    total = np.zeros(d.n)
    converged = False
    sweep = 0
    for sweep in range(1, max_sweeps + 1):
        change = 0.0
        for j in range(k):
            partial = y - intercept - (total - fitted[:, j])
            spline = fit_smoothing_spline(X[:, j], partial, lam=lams[j], min_points=2)
            vals = spline(X[:, j])
            shift = vals.mean()
            spline = SmoothingSpline(spline.knots, spline.values - shift, spline.lam, spline.edf)
            vals = vals - shift
            change = max(change, float(np.max(np.abs(vals - fitted[:, j]))))
            total += vals - fitted[:, j]
            fitted[:, j] = vals
            comps[j] = spline
            if penalty is None and sweep >= gcv_sweeps:
                lams[j] = spline.lam
        if change < tol and (penalty is not None or sweep > gcv_sweeps):
            converged = True
            break
    return AdditiveModel(intercept, tuple(comps), tuple(d.names[c] for c in cols), sweep, converged)


def predict(model: AdditiveModel, rows, names: Sequence[str] | None = None) -> np.ndarray:
    """Evaluate the model on new rows.

    ``rows`` is a :class:`Dataset` or an ``(m, q)`` matrix.  For a matrix,
    ``names`` labels its columns; without names the columns must be the
    model variables in model order.
    """
    if isinstance(rows, Dataset):
        names = rows.names
        rows = rows.predictors
    X = np.asarray(rows, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if names is None:
        if X.shape[1] != len(model.variables):
            raise SchemaError(
                f"expected {len(model.variables)} columns in model order, got {X.shape[1]}"
            )
        idx = list(range(X.shape[1]))
    else:
        names = [str(s) for s in names]
        missing = [v for v in model.variables if v not in names]
        if missing:
            raise SchemaError(f"missing required columns: {', '.join(missing)}")
        idx = [names.index(v) for v in model.variables]
    out = np.full(X.shape[0], model.intercept)
    for j, comp in zip(idx, model.components):
        out += comp(X[:, j])
    return out


def save_model(model: AdditiveModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=1) + "\n")


def load_model(path) -> AdditiveModel:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"model file is not valid JSON: {exc}") from None
    return AdditiveModel.from_dict(doc)
