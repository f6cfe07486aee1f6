"""DCOL association statistics and their significance tests.

The statistic at the centre of everything is

    S = sum_{i=1}^{n-1} (y_{i+1} - y_i)^2 / (2 (n - 2))

computed on the response after the pairs have been sorted by the
predictor.  When ``y = f(x) + e`` with a smooth ``f`` it converges to
``var(e)``, so ``S`` small relative to ``var(y)`` means ``x`` carries
predictive information about ``y``.

Significance comes from a permutation null.  Under independence,
sorting by ``x`` is just a random reordering of ``y``, so the null
distribution depends on ``y`` alone and can be shared by every
candidate predictor; :class:`PermutationPlan` caches it for that
reason.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DegenerateInputError, DegenerateResponseError, InvalidSampleError

__all__ = [
    "AssociationScore",
    "PairedSample",
    "PermutationPlan",
    "combined_p",
    "explained_fraction",
    "pearson_p",
    "pearson_p_columns",
    "permutation_p",
    "s_delta",
    "s_delta_columns",
    "score_pair",
    "sort_pairs",
]

DEFAULT_PERMUTATIONS = 2000

# Permutation index tables above this many entries are regenerated on
# every call instead of being kept in memory.
_MAX_STORED_PERMUTATION_ENTRIES = 16_000_000


def _as_vector(a, name: str) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 1:
        raise InvalidSampleError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class PairedSample:
    """Observed ``(x_i, y_i)`` pairs for one predictor/response combination."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = _as_vector(self.x, "x")
        y = _as_vector(self.y, "y")
        if x.shape != y.shape:
            raise InvalidSampleError(f"x and y differ in length ({x.size} vs {y.size})")
        if x.size < 3:
            raise InvalidSampleError(f"need at least 3 pairs, got {x.size}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise InvalidSampleError("sample contains NaN or infinite values")
        x = x.copy()
        y = y.copy()
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return int(self.x.size)


def sort_pairs(s: PairedSample) -> PairedSample:
    """Return ``s`` with pairs reordered so that ``x`` is nondecreasing.

    The sort is stable: tied ``x`` values keep their original relative
    order, which makes every downstream statistic reproducible.
    """
    order = np.argsort(s.x, kind="stable")
    return PairedSample(s.x[order], s.y[order])


def _check_length(n: int) -> None:
    if n < 3:
        raise InvalidSampleError(f"need at least 3 observations, got {n}")


def s_delta(y_sorted) -> float:
    """Half mean squared successive difference of an x-ordered response.

    >>> s_delta([1.0, 2.0, 3.0, 4.0])
    0.75
    """
    y = _as_vector(y_sorted, "y_sorted")
    _check_length(y.size)
    d = np.diff(y)
    return float(d @ d / (2.0 * (y.size - 2)))


def s_delta_columns(y_ordered: np.ndarray) -> np.ndarray:
    """``s_delta`` applied along axis 0 of an ``(n, k)`` array."""
    y_ordered = np.asarray(y_ordered, dtype=float)
    n = y_ordered.shape[0]
    _check_length(n)
    d = np.diff(y_ordered, axis=0)
    return np.einsum("ij,ij->j", d, d) / (2.0 * (n - 2))


def _s_delta_rows(y_rows: np.ndarray) -> np.ndarray:
    d = np.diff(y_rows, axis=1)
    return np.einsum("ij,ij->i", d, d) / (2.0 * (y_rows.shape[1] - 2))


def explained_fraction(y_sorted) -> float:
    """Fraction of ``var(y)`` attributed to the ordering predictor.

    Computed as ``(var(y) - S) / var(y)`` with the ``ddof=1`` sample
    variance.  Small samples can give slightly negative values; they are
    returned as-is.
    """
    y = _as_vector(y_sorted, "y_sorted")
    _check_length(y.size)
    var_y = float(np.var(y, ddof=1))
    if var_y <= 0.0:
        raise DegenerateResponseError("response is constant; explained fraction undefined")
    return (var_y - s_delta(y)) / var_y


class PermutationPlan:
    """Permutation null for ``S`` with a per-response cache.

    The same ``m`` permutations (drawn once from ``seed``) are applied to
    whatever response is passed in, so repeated calls are deterministic
    and the null for a response is computed at most once while that
    response stays unchanged.

    Parameters
    ----------
    m : int
        Number of permutations.
    seed : int
        Seed for the permutation stream.
    """

    def __init__(self, m: int = DEFAULT_PERMUTATIONS, seed: int = 0):
        if int(m) < 1:
            raise ValueError(f"m must be >= 1, got {m}")
        self.m = int(m)
        self.seed = int(seed)
        self._perm_n: int | None = None
        self._perms: np.ndarray | None = None
        self._cache_key: bytes | None = None
        self.cached_null: np.ndarray | None = None

    def _permutation_blocks(self, n: int, block: int = 256):
        """Yield ``(rows, n)`` index arrays covering all ``m`` permutations."""
        if self._perm_n == n and self._perms is not None:
            yield self._perms
            return
        rng = np.random.default_rng(self.seed)
        base = np.arange(n, dtype=np.int32)
        store = self.m * n <= _MAX_STORED_PERMUTATION_ENTRIES
        kept = []
        for start in range(0, self.m, block):
            rows = min(block, self.m - start)
            idx = rng.permuted(np.broadcast_to(base, (rows, n)), axis=1)
            if store:
                kept.append(idx)
            yield idx
        if store:
            self._perm_n = n
            self._perms = np.concatenate(kept, axis=0)

    def null_distribution(self, y) -> np.ndarray:
        """Sorted permutation null of ``S`` for response ``y``."""
        y = np.ascontiguousarray(_as_vector(y, "y"))
        _check_length(y.size)
        key = y.tobytes()
        if key == self._cache_key and self.cached_null is not None:
            return self.cached_null
        null = np.concatenate([_s_delta_rows(y[idx]) for idx in self._permutation_blocks(y.size)])
        null.sort()
        null.flags.writeable = False
        self._cache_key = key
        self.cached_null = null
        return null

    def p_values(self, observed, y) -> np.ndarray:
        """Add-one permutation p-values for one or more observed ``S``."""
        null = self.null_distribution(y)
        below = np.searchsorted(null, np.asarray(observed, dtype=float), side="right")
        return (1.0 + below) / (self.m + 1.0)


def permutation_p(s: PairedSample, plan: PermutationPlan) -> float:
    """DCOL permutation p-value ``(1 + #{null <= observed}) / (m + 1)``."""
    ordered = sort_pairs(s)
    return float(plan.p_values(s_delta(ordered.y), s.y))


def _t_two_sided(r: np.ndarray, n: int) -> np.ndarray:
    df = n - 2
    r = np.clip(r, -1.0, 1.0)
    # two-sided tail of t with df = n-2 written through the regularised
    # incomplete beta: P(|T| > t) = I_{df/(df+t^2)}(df/2, 1/2), and
    # df/(df+t^2) = 1 - r^2 for t = r sqrt(df/(1-r^2)).
    return special.betainc(0.5 * df, 0.5, 1.0 - r * r)


def pearson_p(x, y) -> float:
    """Two-sided p-value of the Pearson correlation (t test, n-2 df)."""
    s = PairedSample(x, y)
    xc = s.x - s.x.mean()
    yc = s.y - s.y.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    if sxx <= 0.0 or syy <= 0.0:
        raise DegenerateInputError("Pearson correlation undefined for a constant vector")
    r = float(xc @ yc) / np.sqrt(sxx * syy)
    return float(_t_two_sided(np.asarray(r), s.n))


def pearson_p_columns(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Pearson p-value of every column of ``X`` against ``y``.

    Constant columns get ``p = 1``; a constant ``y`` is an error.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = y.size
    _check_length(n)
    yc = y - y.mean()
    syy = float(yc @ yc)
    if syy <= 0.0:
        raise DegenerateResponseError("response is constant")
    Xc = X - X.mean(axis=0)
    sxx = np.einsum("ij,ij->j", Xc, Xc)
    out = np.ones(X.shape[1])
    ok = sxx > 0.0
    r = (Xc[:, ok].T @ yc) / np.sqrt(sxx[ok] * syy)
    out[ok] = _t_two_sided(r, n)
    return out


def combined_p(p_linear, p_dcol):
    """``min(1, 2 * min(p_linear, p_dcol))``; works elementwise on arrays."""
    out = np.minimum(1.0, 2.0 * np.minimum(p_linear, p_dcol))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class AssociationScore:
    """Everything the selector needs to know about one predictor."""

    s_delta: float
    sigma2_y: float
    explained_fraction: float
    p_dcol: float
    p_linear: float
    p_combined: float


def score_pair(s: PairedSample, plan: PermutationPlan) -> AssociationScore:
    """Full association score of one predictor against the response."""
    ordered = sort_pairs(s)
    sd = s_delta(ordered.y)
    var_y = float(np.var(s.y, ddof=1))
    if var_y <= 0.0:
        raise DegenerateResponseError("response is constant")
    p_dcol = float(plan.p_values(sd, s.y))
    if np.ptp(s.x) > 0:
        p_lin = pearson_p(s.x, s.y)
    else:
        p_lin = 1.0
    return AssociationScore(
        s_delta=sd,
        sigma2_y=var_y,
        explained_fraction=(var_y - sd) / var_y,
        p_dcol=p_dcol,
        p_linear=p_lin,
        p_combined=combined_p(p_lin, p_dcol),
    )
