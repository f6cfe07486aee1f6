"""Forward stagewise variable selection driven by roughening.

Loop: score every predictor against the working response (Pearson and
DCOL permutation p-values, combined Bonferroni-style), take the
predictor with the smallest combined p-value, roughen the working
response along it, and repeat until the smallest p-value exceeds
``alpha_stop``.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .assoc import AssociationScore, PermutationPlan, _t_two_sided, combined_p, s_delta_columns
from .data import Dataset
from .errors import DegenerateResponseError, EmptySelectionError, FitError
from .metrics import nrmse
from .predictor import fit_additive, predict
from .roughening import SMOOTHER, RougheningConfig, SmootherSpec, roughen

__all__ = [
    "IterationRecord",
    "SelectionConfig",
    "SelectionTrace",
    "choose_k_by_cv",
    "cv_errors",
    "iterative_group_selection",
    "rank_variables",
    "select_variables",
]

THREADS_ENV = "NVSD_THREADS"


@dataclass(frozen=True)
class SelectionConfig:
    """Tunables of the selection loop.

    ``max_iters=None`` means ten times the number of predictors.  The
    default roughening is the cubic smoothing spline; ``dcol_gradient``
    selects the DCOL gradient step instead.
    """

    theta: float = 0.01
    alpha_stop: float = 0.001
    m_perms: int = 2000
    max_iters: int | None = None
    roughening_mode: str = SMOOTHER
    smoother: SmootherSpec = field(default_factory=SmootherSpec)
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha_stop < 1.0:
            raise ValueError(f"alpha_stop must lie in (0, 1), got {self.alpha_stop}")
        if self.max_iters is not None and self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.m_perms < 1:
            raise ValueError("m_perms must be >= 1")
        # validates theta and mode
        self.roughening

    @property
    def roughening(self) -> RougheningConfig:
        return RougheningConfig(self.theta, self.roughening_mode, self.smoother)

    def iteration_cap(self, p: int) -> int:
        return self.max_iters if self.max_iters is not None else 10 * max(p, 1)


@dataclass(frozen=True)
class IterationRecord:
    iter_index: int
    chosen_variable: str
    column: int
    p_combined: float
    p_linear: float
    p_dcol: float


@dataclass(frozen=True)
class SelectionTrace:
    iterations: tuple[IterationRecord, ...]
    selected_set: tuple[str, ...]
    selected_columns: tuple[int, ...]
    stop_reason: str
    final_min_p: float

    def to_dict(self) -> dict:
        return {
            "iterations": [asdict(r) for r in self.iterations],
            "selected_set": list(self.selected_set),
            "selected_columns": list(self.selected_columns),
            "stop_reason": self.stop_reason,
            "final_min_p": self.final_min_p,
        }


def _n_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


class _Scanner:
    """Per-dataset precomputation reused across loop iterations."""

    def __init__(self, X: np.ndarray, plan: PermutationPlan, threads: int | None = None):
        self.X = X
        self.plan = plan
        self.orders = np.argsort(X, axis=0, kind="stable")
        self.Xc = X - X.mean(axis=0)
        self.sxx = np.einsum("ij,ij->j", self.Xc, self.Xc)
        self.threads = threads or _n_threads()

    def _s_delta(self, y: np.ndarray) -> np.ndarray:
        p = self.X.shape[1]
        if self.threads == 1 or p < 2 * self.threads:
            return s_delta_columns(y[self.orders])
        chunks = np.array_split(np.arange(p), self.threads)
        with ThreadPoolExecutor(self.threads) as pool:
            parts = pool.map(lambda c: s_delta_columns(y[self.orders[:, c]]), chunks)
        return np.concatenate(list(parts))

    def scan(self, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, float]:
        """Return ``(s_delta, p_dcol, p_linear, p_combined, var_y)`` for every column."""
        n = y.size
        var_y = float(np.var(y, ddof=1))
        if not var_y > 0.0:
            raise DegenerateResponseError("response is constant")
        sd = self._s_delta(y)
        p_dcol = self.plan.p_values(sd, y)
        yc = y - y.mean()
        syy = float(yc @ yc)
        p_lin = np.ones(sd.size)
        ok = self.sxx > 0.0
        if ok.any():
            r = (self.Xc[:, ok].T @ yc) / np.sqrt(self.sxx[ok] * syy)
            p_lin[ok] = _t_two_sided(r, n)
        return sd, p_dcol, p_lin, combined_p(p_lin, p_dcol), var_y


def rank_variables(d: Dataset, cfg: SelectionConfig | None = None,
                   plan: PermutationPlan | None = None) -> list[AssociationScore]:
    """Score every predictor of ``d`` against its response.

    One permutation null (from the response) is shared by all predictors.
    """
    cfg = cfg or SelectionConfig()
    plan = plan or PermutationPlan(cfg.m_perms, cfg.seed)
    sd, p_dcol, p_lin, p_comb, var_y = _Scanner(d.predictors, plan).scan(np.array(d.response))
    return [
        AssociationScore(
            s_delta=float(sd[j]),
            sigma2_y=var_y,
            explained_fraction=float((var_y - sd[j]) / var_y),
            p_dcol=float(p_dcol[j]),
            p_linear=float(p_lin[j]),
            p_combined=float(p_comb[j]),
        )
        for j in range(d.p)
    ]


def select_variables(d: Dataset, cfg: SelectionConfig | None = None) -> SelectionTrace:
    """Run the forward stagewise loop on ``d``; ``d`` itself is not modified."""
    cfg = cfg or SelectionConfig()
    rough = cfg.roughening
    plan = PermutationPlan(cfg.m_perms, cfg.seed)
    records: list[IterationRecord] = []
    if d.p == 0:
        return SelectionTrace((), (), (), "threshold", 1.0)

    scanner = _Scanner(d.predictors, plan)
    y = np.array(d.response, dtype=float)
    if not np.var(y) > 0:
        raise DegenerateResponseError("response is constant")

    stop_reason = "max_iters"
    final_min = float("nan")
    for it in range(cfg.iteration_cap(d.p)):
        try:
            _, p_dcol, p_lin, p_comb, _ = scanner.scan(y)
        except DegenerateResponseError:
            stop_reason = "threshold"
            final_min = 1.0
            break
        j = int(np.argmin(p_comb))
        final_min = float(p_comb[j])
        if final_min > cfg.alpha_stop:
            stop_reason = "threshold"
            break
        records.append(IterationRecord(it, d.names[j], j, final_min, float(p_lin[j]), float(p_dcol[j])))
        try:
            y = roughen(d.predictors[:, j], y, rough, order=scanner.orders[:, j])
        except FitError:
            stop_reason = "threshold"
            break

    seen: dict[int, None] = {}
    for r in records:
        seen.setdefault(r.column, None)
    cols = tuple(seen)
    return SelectionTrace(tuple(records), tuple(d.names[c] for c in cols), cols, stop_reason, final_min)


def _fold_ids(n: int, folds: int, seed: int) -> np.ndarray:
    perm = np.random.default_rng(seed).permutation(n)
    ids = np.empty(n, dtype=int)
    for f, part in enumerate(np.array_split(perm, folds)):
        ids[part] = f
    return ids


def cv_errors(d: Dataset, ranked: Sequence, folds: int = 5, seed: int = 0,
              penalty: float | None = None) -> np.ndarray:
    """Mean held-out NRMSE of the additive model on the top-k variables, k = 1..len(ranked)."""
    ranked = list(ranked)
    if not ranked:
        raise EmptySelectionError("ranked variable list is empty")
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if d.n < 2 * folds:
        raise ValueError(f"need at least {2 * folds} rows for {folds}-fold CV")
    ids = _fold_ids(d.n, folds, seed)
    errs = np.zeros(len(ranked))
    for f in range(folds):
        train = d.rows(ids != f)
        test = d.rows(ids == f)
        for k in range(1, len(ranked) + 1):
            model = fit_additive(train, ranked[:k], penalty=penalty)
            errs[k - 1] += nrmse(test.response, predict(model, test))
    return errs / folds


def choose_k_by_cv(d: Dataset, ranked: Sequence, folds: int = 5, seed: int = 0,
                   penalty: float | None = None) -> int:
    """Number of leading ``ranked`` variables with the lowest CV error (ties: smaller k)."""
    ranked = list(ranked)
    if len(ranked) == 1:
        return 1
    return int(np.argmin(cv_errors(d, ranked, folds, seed, penalty))) + 1


def iterative_group_selection(d: Dataset, cfg: SelectionConfig | None = None,
                              min_group: int = 20) -> list[list[str]]:
    """Select, drop the selected columns, repeat until a group is smaller than ``min_group``.

    The final (small) group is included in the result.
    """
    cfg = cfg or SelectionConfig()
    groups: list[list[str]] = []
    work = d
    while work.p > 0:
        trace = select_variables(work, cfg)
        group = list(trace.selected_set)
        groups.append(group)
        if len(group) < min_group:
            break
        work = work.drop(group)
    return groups
