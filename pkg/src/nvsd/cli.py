"""Command-line interface: ``nvsd <command> [options] FILE``.

Structured results are JSON objects carrying ``schema_version``; tables
can be written as delimited text with ``--format csv``.  Exit status is
0 on success, 1 on runtime errors and 2 on usage errors; errors are
reported on stderr as a JSON object.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .data import Dataset
from .errors import NVSDError, SchemaError
from .io import IngestSpec, ingest, knn_impute, read_frame
from .predictor import fit_additive, load_model, predict, save_model
from .roughening import DCOL_GRADIENT, SMOOTHER
from .selector import (
    SelectionConfig,
    choose_k_by_cv,
    cv_errors,
    iterative_group_selection,
    rank_variables,
    select_variables,
)
from .simulation import SimulationSpec, run_benchmark

SCHEMA_VERSION = 1
_ROUGHENING = {"dcol": DCOL_GRADIENT, "spline": SMOOTHER}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _clean(obj):
    """Make ``obj`` JSON-safe: numpy scalars to Python, non-finite floats to ``None``."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _record(command: str, body: dict) -> dict:
    return {"schema_version": SCHEMA_VERSION, "command": command, **body}


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_json(command: str, body: dict, out: str | None) -> None:
    _emit(json.dumps(_clean(_record(command, body)), indent=2) + "\n", out)


def _table(rows: list[dict], delimiter: str) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), delimiter=delimiter, lineterminator="\n")
        w.writeheader()
        w.writerows(_clean(rows))
    return buf.getvalue()


def _config(args) -> SelectionConfig:
    return SelectionConfig(
        theta=args.theta,
        alpha_stop=args.alpha,
        m_perms=args.perms,
        max_iters=args.max_iters,
        roughening_mode=_ROUGHENING[args.roughening],
        seed=args.seed,
    )


def _dataset(args) -> Dataset:
    if args.response is None:
        raise UsageError("--response is required for this command")
    return ingest(IngestSpec(args.file, args.response, args.delimiter, args.na_threshold,
                             args.knn_k, tuple(args.exclude)))


def _variables(args) -> list[str] | None:
    if not args.variables:
        return None
    return [v for v in args.variables.split(",") if v]


def cmd_rank(args) -> None:
    d = _dataset(args)
    scores = rank_variables(d, _config(args))
    rows = [{"variable": name, **vars(s)} for name, s in zip(d.names, scores)]
    rows.sort(key=lambda r: (r["p_combined"], r["p_linear"]))
    if args.format == "csv":
        _emit(_table(rows, args.delimiter), args.out)
    else:
        _emit_json("rank", {"n": d.n, "p": d.p, "variables": rows}, args.out)


def cmd_select(args) -> None:
    d = _dataset(args)
    trace = select_variables(d, _config(args))
    if args.format == "csv":
        _emit(_table([vars(r) for r in trace.iterations], args.delimiter), args.out)
    else:
        _emit_json("select", {"n": d.n, "p": d.p, **trace.to_dict()}, args.out)


def cmd_groups(args) -> None:
    d = _dataset(args)
    groups = iterative_group_selection(d, _config(args), min_group=args.min_group)
    _emit_json("groups", {"groups": groups}, args.out)


def _ranked_or_selected(args, d: Dataset) -> list[str]:
    names = _variables(args)
    if names is None:
        names = list(select_variables(d, _config(args)).selected_set)
    for v in names:
        d.column_index(v)
    return names


def cmd_cv(args) -> None:
    d = _dataset(args)
    ranked = _ranked_or_selected(args, d)
    errs = cv_errors(d, ranked, folds=args.folds, seed=args.seed)
    k = int(np.argmin(errs)) + 1
    _emit_json("cv", {"ranked": ranked, "cv_nrmse": errs, "k": k, "chosen": ranked[:k]}, args.out)


def cmd_fit(args) -> None:
    d = _dataset(args)
    names = _variables(args)
    if names is None:
        ranked = list(select_variables(d, _config(args)).selected_set)
        if not ranked:
            raise NVSDError("no variable was selected; nothing to fit")
        names = ranked[: choose_k_by_cv(d, ranked, folds=args.folds, seed=args.seed)]
    model = fit_additive(d, names)
    if args.out:
        save_model(model, args.out)
    else:
        _emit_json("fit", {"model": model.to_dict()}, None)


def cmd_predict(args) -> None:
    if not args.model:
        raise UsageError("--model is required for predict")
    model = load_model(args.model)
    frame = read_frame(args.file, args.delimiter)
    missing = [v for v in model.variables if v not in frame.columns]
    if missing:
        raise SchemaError(f"missing required columns: {', '.join(missing)}")
    X = frame[list(model.variables)].to_numpy(dtype=float)
    if np.isnan(X).any():
        raise NVSDError("input has missing values in model columns; run `impute` first")
    yhat = predict(model, X)
    if args.format == "csv":
        _emit(_table([{"prediction": float(v)} for v in yhat], args.delimiter), args.out)
    else:
        _emit_json("predict", {"variables": list(model.variables), "predictions": yhat}, args.out)


def cmd_simulate(args) -> None:
    if args.config:
        spec = SimulationSpec.load(args.config)
    else:
        spec = SimulationSpec(q=args.q, p=args.p, n=args.n, sigma=args.sigma,
                              correlation=args.correlation, rho=args.rho,
                              correlation_file=args.correlation_file,
                              marginal=args.marginal, seed=args.seed)
    result = run_benchmark(spec, _config(args), replicates=args.replicates, folds=args.folds)
    if args.table:
        Path(args.table).write_text(result.to_csv())
    if args.format == "csv":
        _emit(result.to_csv(), args.out)
    else:
        _emit_json("simulate", {"spec": spec.to_dict(), "summary": result.summary(),
                                "replicates": result.rows}, args.out)


def cmd_impute(args) -> None:
    frame = read_frame(args.file, args.delimiter)
    num = [c for c in frame.columns if np.issubdtype(frame[c].dtype, np.number)]
    frame[num] = knn_impute(frame[num].to_numpy(dtype=float), args.knn_k)
    buf = io.StringIO()
    frame.to_csv(buf, sep=args.delimiter, index=False, lineterminator="\n", float_format="%.17g")
    _emit(buf.getvalue(), args.out)


def cmd_plotdata(args) -> None:
    d = _dataset(args)
    names = _ranked_or_selected(args, d)
    panels = [{"variable": v, "x": d.predictors[:, d.column_index(v)], "y": d.response}
              for v in names]
    _emit_json("plotdata", {"panels": panels}, args.out)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("selection")
    g.add_argument("--theta", type=float, default=0.01, help="roughening step size")
    g.add_argument("--alpha", type=float, default=0.001, help="stopping alpha level")
    g.add_argument("--perms", type=int, default=2000, help="permutations for the DCOL null")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--max-iters", type=int, default=None)
    g.add_argument("--roughening", choices=sorted(_ROUGHENING), default="spline")
    d = common.add_argument_group("data")
    d.add_argument("--response", help="response column name or zero-based index")
    d.add_argument("--delimiter", default=",")
    d.add_argument("--na-threshold", type=float, default=0.10,
                   help="drop predictor columns with a larger missing fraction")
    d.add_argument("--knn-k", type=int, default=10)
    d.add_argument("--exclude", action="append", default=[], help="column never used as predictor")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    parser = _Parser(prog="nvsd", description="Nonlinear variable selection by DCOL roughening.")
    parser.add_argument("--version", action="version", version=f"nvsd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_, file=True):
        p = sub.add_parser(name, parents=[common], help=help_)
        if file:
            p.add_argument("file")
        p.set_defaults(func=func)
        return p

    add("rank", cmd_rank, "score every predictor once")
    add("select", cmd_select, "run the forward stagewise selection")
    add("groups", cmd_groups, "repeat selection on the remaining predictors").add_argument(
        "--min-group", type=int, default=20)
    for name, func, help_ in (("cv", cmd_cv, "choose k by cross-validation"),
                              ("fit", cmd_fit, "fit the additive predictor"),
                              ("plotdata", cmd_plotdata, "emit (x, y) pairs of selected variables")):
        p = add(name, func, help_)
        p.add_argument("--variables", help="comma-separated ranked variables (default: select)")
        p.add_argument("--folds", type=int, default=5)
    add("predict", cmd_predict, "predict from a saved model").add_argument("--model")
    add("impute", cmd_impute, "KNN-impute numeric columns of a file")
    p = add("simulate", cmd_simulate, "run simulation benchmarks", file=False)
    p.add_argument("--config", help="JSON simulation spec")
    p.add_argument("--q", type=int, default=3)
    p.add_argument("--p", type=int, default=100)
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--correlation", choices=("identity", "ar1", "file"), default="identity")
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--correlation-file")
    p.add_argument("--marginal", choices=("normal", "uniform"), default="normal")
    p.add_argument("--replicates", type=int, default=10)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--table", help="also write per-replicate rows as CSV here")
    return parser


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"schema_version": SCHEMA_VERSION,
                                 "error": {"type": kind, "message": message}}) + "\n")
    return code


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except UsageError as exc:
        return _fail("UsageError", str(exc), 2)
    except (NVSDError, ValueError, KeyError, OSError) as exc:
        return _fail(type(exc).__name__, str(exc), 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
