"""Reading delimited data into a :class:`Dataset`, with KNN imputation."""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd
from sklearn.impute import KNNImputer

from .data import Dataset
from .errors import IngestError, SchemaError

__all__ = [
    "COMMUNITIES_NON_PREDICTIVE",
    "COMMUNITIES_RESPONSE",
    "NA_VALUES",
    "IngestSpec",
    "ingest",
    "knn_impute",
    "load_boston",
    "load_communities",
    "read_communities_raw",
    "read_frame",
]

NA_VALUES = ("", "NA", "?")

COMMUNITIES_RESPONSE = "ViolentCrimesPerPop"
COMMUNITIES_NON_PREDICTIVE = ("state", "county", "community", "communityname", "fold")


@dataclass(frozen=True)
class IngestSpec:
    """How to turn a delimited file into a :class:`Dataset`.

    ``response`` is a column name or a zero-based column index.  Columns
    whose missing fraction exceeds ``column_na_threshold`` are dropped,
    remaining gaps are filled by :func:`knn_impute` with ``knn_k``
    neighbours.  ``exclude`` names columns that are never predictors
    (identifiers, fold labels).
    """

    path: str
    response: str | int
    delimiter: str = ","
    column_na_threshold: float = 0.10
    knn_k: int = 10
    exclude: tuple[str, ...] = ()

    def __post_init__(self):
        if not 0.0 <= self.column_na_threshold < 1.0:
            raise ValueError("column_na_threshold must lie in [0, 1)")
        if self.knn_k < 1:
            raise ValueError("knn_k must be >= 1")


def read_frame(path, delimiter: str = ",") -> pd.DataFrame:
    """Parse a delimited file with a header row; ``""``, ``NA`` and ``?`` are missing."""
    try:
        return pd.read_csv(path, sep=delimiter, na_values=list(NA_VALUES), keep_default_na=False,
                           float_precision="round_trip")
    except FileNotFoundError:
        raise IngestError(f"no such file: {path}") from None
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise IngestError(f"cannot parse {path}: {exc}") from None


def knn_impute(M, k: int = 10) -> np.ndarray:
    """Fill NaNs with the mean of the ``k`` nearest rows that observe the column.

    Distances are Euclidean over coordinates observed in both rows, after
    standardizing each column by its observed mean and standard
    deviation; observed cells are returned unchanged.
    """
    M = np.array(M, dtype=float)
    if M.ndim != 2:
        raise IngestError("knn_impute expects a 2-D matrix")
    if k < 1:
        raise ValueError("k must be >= 1")
    miss = np.isnan(M)
    if not miss.any():
        return M
    if miss.all(axis=1).any():
        raise IngestError(f"row {int(np.flatnonzero(miss.all(axis=1))[0])} has no observed values")
    if miss.all(axis=0).any():
        raise IngestError(f"column {int(np.flatnonzero(miss.all(axis=0))[0])} has no observed values")
    if k >= M.shape[0]:
        raise ValueError(f"k={k} must be smaller than the number of rows ({M.shape[0]})")
    mu = np.nanmean(M, axis=0)
    sd = np.nanstd(M, axis=0)
    sd[~(sd > 0)] = 1.0
    Z = (M - mu) / sd
    filled = KNNImputer(n_neighbors=k, keep_empty_features=True).fit_transform(Z)
    out = M.copy()
    out[miss] = (filled * sd + mu)[miss]
    return out


def _response_name(frame: pd.DataFrame, response) -> str:
    if isinstance(response, (int, np.integer)) or (isinstance(response, str) and response.isdigit()
                                                   and response not in frame.columns):
        i = int(response)
        if not 0 <= i < frame.shape[1]:
            raise SchemaError(f"response index {i} out of range for {frame.shape[1]} columns")
        return str(frame.columns[i])
    if response not in frame.columns:
        raise SchemaError(f"response column {response!r} not found")
    return str(response)


def frame_to_dataset(frame: pd.DataFrame, response, column_na_threshold: float = 0.10,
                     knn_k: int = 10, exclude: Sequence[str] = ()) -> Dataset:
    """Apply the missing-data rules to a parsed frame."""
    target = _response_name(frame, response)
    frame = frame.drop(columns=[c for c in exclude if c in frame.columns and c != target])
    frame = frame[frame[target].notna()]
    predictors = frame.drop(columns=[target])
    bad = [c for c in predictors.columns if not pd.api.types.is_numeric_dtype(predictors[c])]
    if bad:
        raise IngestError(f"non-numeric columns: {', '.join(map(str, bad))}")
    if not pd.api.types.is_numeric_dtype(frame[target]):
        raise IngestError(f"response column {target!r} is not numeric")
    na_frac = predictors.isna().mean(axis=0)
    predictors = predictors.loc[:, na_frac <= column_na_threshold]
    if predictors.shape[1] == 0:
        raise IngestError("every predictor column was dropped by the missing-value filter")
    X = predictors.to_numpy(dtype=float)
    if np.isnan(X).any():
        X = knn_impute(X, min(knn_k, X.shape[0] - 1))
    return Dataset(X, frame[target].to_numpy(dtype=float), tuple(map(str, predictors.columns)))


def ingest(spec: IngestSpec) -> Dataset:
    """Read ``spec.path`` and return a complete :class:`Dataset`."""
    frame = read_frame(spec.path, spec.delimiter)
    return frame_to_dataset(frame, spec.response, spec.column_na_threshold, spec.knn_k, spec.exclude)


def load_boston() -> Dataset:
    """The bundled 506 x 13 housing data, response ``medv``."""
    path = resources.files("nvsd.datasets").joinpath("boston.csv")
    with resources.as_file(path) as p:
        return ingest(IngestSpec(str(p), "medv"))


def _communities_names(names_path) -> list[str]:
    text = Path(names_path).read_text(errors="replace")
    return re.findall(r"^@attribute\s+(\S+)", text, flags=re.MULTILINE | re.IGNORECASE)


def read_communities_raw(data_path, names_path) -> pd.DataFrame:
    """Raw UCI communities table with column names taken from the ``.names`` file."""
    names = _communities_names(names_path)
    if not names:
        raise IngestError(f"no @attribute lines in {names_path}")
    try:
        return pd.read_csv(data_path, header=None, names=names, na_values=list(NA_VALUES),
                           keep_default_na=False, float_precision="round_trip")
    except FileNotFoundError:
        raise IngestError(f"no such file: {data_path}") from None


def load_communities(data_path, names_path, column_na_threshold: float = 0.10,
                     knn_k: int = 10) -> Dataset:
    """Read the raw UCI communities files (header-less ``.data`` plus ``.names``).

    Identifier and fold columns are removed before the missing-value
    filter; the response is the violent crime rate.
    """
    frame = read_communities_raw(data_path, names_path)
    return frame_to_dataset(frame, COMMUNITIES_RESPONSE, column_na_threshold, knn_k,
                            COMMUNITIES_NON_PREDICTIVE)
