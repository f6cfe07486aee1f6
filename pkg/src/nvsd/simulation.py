"""Sparse additive data generator and benchmark driver.

Generation: correlated Gaussian predictors (optionally mapped to uniform
marginals), ``q`` randomly chosen true predictors, each linked to the
outcome through a randomly drawn function with a random signed
coefficient, plus Gaussian noise.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import linalg, stats

from .data import Dataset
from .errors import DecompositionError
from .metrics import nrmse
from .predictor import fit_additive, predict
from .selector import SelectionConfig, choose_k_by_cv, select_variables

__all__ = [
    "FAMILIES",
    "FAMILY_PROBS",
    "BenchmarkResult",
    "Link",
    "LinkFunction",
    "SimulationSpec",
    "draw_links",
    "gen_outcome",
    "gen_predictors",
    "nrmse",
    "run_benchmark",
    "simulate",
]

FAMILIES = ("linear", "absolute", "sine", "sawtooth", "box")
FAMILY_PROBS = (0.5, 0.125, 0.125, 0.125, 0.125)


def _sawtooth(x: np.ndarray) -> np.ndarray:
    # period 2, range [-1, 1)
    return 2.0 * (x / 2.0 - np.floor(x / 2.0 + 0.5))


_EVAL = {
    "linear": lambda x: x,
    "absolute": np.abs,
    "sine": np.sin,
    "sawtooth": _sawtooth,
    "box": lambda x: np.sign(np.sin(np.pi * x)),
}


@dataclass(frozen=True)
class LinkFunction:
    """``f((x - center) / scale)`` for one of the named families.

    ``center`` and ``scale`` let the periodic families oscillate over the
    bulk of the predictor distribution; uniform(0, 1) predictors use
    ``center=0.5, scale=1/6`` so the argument spans ``[-3, 3]``.
    """

    family: str
    center: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.family not in _EVAL:
            raise ValueError(f"unknown link family {self.family!r}; expected one of {FAMILIES}")
        if not self.scale > 0.0:
            raise ValueError("scale must be positive")

    def __call__(self, x) -> np.ndarray:
        z = (np.asarray(x, dtype=float) - self.center) / self.scale
        return _EVAL[self.family](z)


@dataclass(frozen=True)
class Link:
    """A true predictor's link: column, function and signed coefficient."""

    column: int
    function: LinkFunction
    beta: float

    def to_dict(self) -> dict:
        return {"column": self.column, "family": self.function.family,
                "center": self.function.center, "scale": self.function.scale, "beta": self.beta}

    @classmethod
    def from_dict(cls, doc: dict) -> "Link":
        fn = LinkFunction(doc["family"], float(doc.get("center", 0.0)), float(doc.get("scale", 1.0)))
        return cls(int(doc["column"]), fn, float(doc["beta"]))


def draw_links(q: int, rng: np.random.Generator, center: float = 0.0,
               scale: float = 1.0) -> list[tuple[LinkFunction, float]]:
    """Draw ``q`` independent (function, signed coefficient) pairs.

    Families follow :data:`FAMILY_PROBS`; ``|beta| ~ U[1, 3]`` with a
    random sign.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    fam = rng.choice(len(FAMILIES), size=q, p=FAMILY_PROBS)
    beta = rng.uniform(1.0, 3.0, size=q)
    flip = rng.random(q) < 0.5
    beta = np.where(flip, -beta, beta)
    return [(LinkFunction(FAMILIES[f], center, scale), float(b)) for f, b in zip(fam, beta)]


@dataclass(frozen=True)
class SimulationSpec:
    """Parameters of one simulated configuration.

    ``correlation`` is ``"identity"``, ``"ar1"`` (uses ``rho``) or
    ``"file"`` (reads a whitespace or comma delimited ``p x p`` matrix
    from ``correlation_file``).  ``links`` pins the true predictors; when
    empty they are drawn at random per replicate.
    """

    q: int = 3
    p: int = 100
    n: int = 400
    sigma: float = 1.0
    correlation: str = "identity"
    rho: float = 0.0
    correlation_file: str | None = None
    marginal: str = "normal"
    links: tuple[Link, ...] = ()
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.q <= self.p:
            raise ValueError(f"need 1 <= q <= p, got q={self.q}, p={self.p}")
        if self.n < 3:
            raise ValueError("n must be >= 3")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.correlation not in ("identity", "ar1", "file"):
            raise ValueError(f"unknown correlation source {self.correlation!r}")
        if self.correlation == "ar1" and not -1.0 < self.rho < 1.0:
            raise ValueError("AR(1) rho must lie in (-1, 1)")
        if self.correlation == "file" and not self.correlation_file:
            raise ValueError("correlation='file' needs correlation_file")
        if self.marginal not in ("normal", "uniform"):
            raise ValueError(f"unknown marginal {self.marginal!r}")
        if self.links and len(self.links) != self.q:
            raise ValueError(f"{len(self.links)} links given for q={self.q}")
        object.__setattr__(self, "links", tuple(
            lk if isinstance(lk, Link) else Link.from_dict(lk) for lk in self.links))

    @property
    def link_center_scale(self) -> tuple[float, float]:
        return (0.5, 1.0 / 6.0) if self.marginal == "uniform" else (0.0, 1.0)

    def correlation_matrix(self) -> np.ndarray | None:
        """``None`` for identity, else the ``p x p`` matrix."""
        if self.correlation == "identity":
            return None
        if self.correlation == "ar1":
            idx = np.arange(self.p)
            return self.rho ** np.abs(idx[:, None] - idx[None, :])
        text = Path(self.correlation_file).read_text()
        R = np.loadtxt(io.StringIO(text.replace(",", " ")), ndmin=2)
        if R.shape != (self.p, self.p):
            raise DecompositionError(f"correlation file is {R.shape}, expected {(self.p, self.p)}")
        if not np.allclose(R, R.T) or not np.allclose(np.diag(R), 1.0):
            raise DecompositionError("correlation matrix must be symmetric with unit diagonal")
        return R

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["links"] = [lk.to_dict() for lk in self.links]
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "SimulationSpec":
        doc = dict(doc)
        doc["links"] = tuple(Link.from_dict(lk) for lk in doc.get("links", ()))
        return cls(**doc)

    @classmethod
    def load(cls, path) -> "SimulationSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def gen_predictors(spec: SimulationSpec, rng: np.random.Generator) -> np.ndarray:
    """``n x p`` matrix with i.i.d. rows from the spec's correlation model."""
    Z = rng.standard_normal((spec.n, spec.p))
    R = spec.correlation_matrix()
    if R is not None:
        try:
            C = linalg.cholesky(R, lower=False)
        except linalg.LinAlgError as exc:
            raise DecompositionError(f"correlation matrix is not positive definite: {exc}") from None
        Z = Z @ C
    if spec.marginal == "uniform":
        Z = stats.norm.cdf(Z)
    return Z


def gen_outcome(X: np.ndarray, links: Sequence[Link], sigma: float,
                rng: np.random.Generator | None = None) -> np.ndarray:
    """``y = sum beta_i f_i(x_i) + eps`` with ``eps ~ N(0, sigma^2)``."""
    X = np.asarray(X, dtype=float)
    y = np.zeros(X.shape[0])
    for lk in links:
        y += lk.beta * lk.function(X[:, lk.column])
    if sigma > 0:
        if rng is None:
            raise ValueError("rng is required when sigma > 0")
        y += sigma * rng.standard_normal(X.shape[0])
    return y


def _links_for(spec: SimulationSpec, rng: np.random.Generator) -> tuple[Link, ...]:
    if spec.links:
        return spec.links
    cols = rng.choice(spec.p, size=spec.q, replace=False)
    center, scale = spec.link_center_scale
    return tuple(Link(int(c), f, b) for c, (f, b) in zip(cols, draw_links(spec.q, rng, center, scale)))


def simulate(spec: SimulationSpec, rng: np.random.Generator) -> tuple[Dataset, tuple[Link, ...]]:
    """One simulated dataset together with its true links."""
    links = _links_for(spec, rng)
    X = gen_predictors(spec, rng)
    y = gen_outcome(X, links, spec.sigma, rng)
    return Dataset.from_arrays(X, y), links


@dataclass
class BenchmarkResult:
    """Per-replicate rows and their aggregate."""

    rows: list[dict] = field(default_factory=list)

    def summary(self) -> dict:
        out: dict = {"replicates": len(self.rows)}
        for key in ("nrmse", "baseline_nrmse", "n_selected", "true_found", "false_selected"):
            vals = np.array([r[key] for r in self.rows], dtype=float)
            out[f"{key}_mean"] = float(vals.mean()) if vals.size else float("nan")
            out[f"{key}_sd"] = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        return out

    def to_csv(self) -> str:
        if not self.rows:
            return ""
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(self.rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.rows)
        return buf.getvalue()


def _replicate(spec: SimulationSpec, cfg: SelectionConfig, seed: np.random.SeedSequence,
               rep: int, folds: int) -> dict:
    rng = np.random.default_rng(seed)
    d, links = simulate(spec, rng)
    perm = rng.permutation(d.n)
    half = d.n // 2
    train, test = d.rows(np.sort(perm[:half])), d.rows(np.sort(perm[half:]))
    trace = select_variables(train, cfg)
    chosen = list(trace.selected_set)
    if chosen:
        k = choose_k_by_cv(train, chosen, folds=folds, seed=cfg.seed)
        model = fit_additive(train, chosen[:k])
        pred = predict(model, test)
    else:
        k = 0
        pred = np.full(test.n, train.response.mean())
    truth = {d.names[lk.column] for lk in links}
    found = truth & set(chosen)
    return {
        "replicate": rep,
        "q": spec.q,
        "p": spec.p,
        "n": spec.n,
        "sigma": spec.sigma,
        "n_selected": len(chosen),
        "k": k,
        "true_found": len(found),
        "false_selected": len(chosen) - len(found),
        "nrmse": nrmse(test.response, pred),
        "baseline_nrmse": nrmse(test.response, np.full(test.n, train.response.mean())),
    }


def run_benchmark(spec: SimulationSpec, cfg: SelectionConfig | None = None,
                  replicates: int = 10, folds: int = 5) -> BenchmarkResult:
    """Generate, split 1:1, select on train, choose k by CV, fit and score on test.

    Each replicate uses its own child seed of ``spec.seed``, so results
    do not depend on the order replicates are run in.
    """
    cfg = cfg or SelectionConfig()
    seeds = np.random.SeedSequence(spec.seed).spawn(replicates)
    return BenchmarkResult([_replicate(spec, cfg, s, i, folds) for i, s in enumerate(seeds)])
