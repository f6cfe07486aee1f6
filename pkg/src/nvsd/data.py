from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import IngestError, SchemaError


@dataclass(frozen=True)
class Dataset:
    """``n x p`` predictor matrix, response vector and column names.

    Arrays are copied and frozen on construction, so a ``Dataset`` can be
    shared freely; operations that modify the response work on copies.
    """

    predictors: np.ndarray
    response: np.ndarray
    names: tuple[str, ...]

    def __post_init__(self):
        X = np.array(self.predictors, dtype=float, copy=True)
        y = np.array(self.response, dtype=float, copy=True).ravel()
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2:
            raise IngestError(f"predictors must be a 2-D matrix, got shape {X.shape}")
        if X.shape[0] != y.size:
            raise IngestError(f"{X.shape[0]} predictor rows but {y.size} responses")
        if y.size < 3:
            raise IngestError(f"need at least 3 rows, got {y.size}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise IngestError("dataset contains missing or non-finite values")
        names = tuple(str(s) for s in self.names)
        if len(names) != X.shape[1]:
            raise IngestError(f"{len(names)} names for {X.shape[1]} predictor columns")
        if len(set(names)) != len(names):
            raise IngestError("predictor names must be unique")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "predictors", X)
        object.__setattr__(self, "response", y)
        object.__setattr__(self, "names", names)

    @classmethod
    def from_arrays(cls, X, y, names: Sequence[str] | None = None) -> "Dataset":
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if names is None:
            names = [f"x{j + 1}" for j in range(X.shape[1])]
        return cls(X, y, tuple(names))

    @property
    def n(self) -> int:
        return int(self.response.size)

    @property
    def p(self) -> int:
        return int(self.predictors.shape[1])

    def column_index(self, name_or_index) -> int:
        if isinstance(name_or_index, (int, np.integer)):
            if not 0 <= name_or_index < self.p:
                raise SchemaError(f"column index {name_or_index} out of range")
            return int(name_or_index)
        try:
            return self.names.index(str(name_or_index))
        except ValueError:
            raise SchemaError(f"unknown column {name_or_index!r}") from None

    def subset(self, columns: Sequence, rows=None) -> "Dataset":
        """New dataset with the given columns (names or indices) and rows."""
        idx = [self.column_index(c) for c in columns]
        X = self.predictors[:, idx]
        y = self.response
        if rows is not None:
            X = X[rows]
            y = y[rows]
        return Dataset(X, y, tuple(self.names[i] for i in idx))

    def rows(self, rows) -> "Dataset":
        return Dataset(self.predictors[rows], self.response[rows], self.names)

    def drop(self, columns: Sequence) -> "Dataset":
        gone = {self.column_index(c) for c in columns}
        keep = [j for j in range(self.p) if j not in gone]
        return self.subset(keep)
