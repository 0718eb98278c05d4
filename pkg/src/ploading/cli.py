"""Command line front end.

Subcommands
-----------
pla       block detection on a numeric CSV
compare   loading-based against p-value based discarding on one CSV
bounds    loading cut-off window for one synthetic population draw
simulate  seeded Monte Carlo study over a sample-size grid

Exit codes: 0 success, 1 usage or flag errors, 2 malformed input files,
3 degenerate or structurally invalid data, 4 numerical failures.

Reports are JSON by default (schema_version 1, validated by
``schemas/report.schema.json``); ``--format csv`` flattens the tabular
part for ``pla``, ``compare`` and ``bounds``.  Stochastic subcommands
require ``--seed`` or the ``PLA_SEED`` environment variable.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__, linalg, perturbation, pla, simulation
from .exceptions import (
    BlockMismatchError,
    ConstructionError,
    CsvFormatError,
    DegenerateDataError,
    NotCenteredError,
    NumericalError,
    SingularMatrixError,
    StructuralZeroError,
)
from .ols import discard_by_ols, ols_fit

SCHEMA_VERSION = "1"
GAP_CONVENTION = "distance to the nearest adjacent eigenvalue; infinite at the spectrum edges"


class _UsageError(Exception):
    """Raised for errors argparse cannot see; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _basis(text: str) -> str:
    aliases = {"cov": "covariance", "corr": "correlation"}
    value = aliases.get(text, text)
    if value not in pla.VALID_BASES:
        raise argparse.ArgumentTypeError(
            f"basis must be 'covariance'/'cov' or 'correlation'/'corr', got {text!r}"
        )
    return value


def _tau_number(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"tau must be a number in [0, 1), got {text!r}"
        ) from None
    if not (math.isfinite(value) and 0.0 <= value < 1.0):
        raise argparse.ArgumentTypeError(f"tau must lie in [0, 1), got {text}")
    return value


def _tau_or_auto(text: str):
    if text == "auto":
        return "auto"
    return _tau_number(text)


def _constant(text: str) -> float:
    if text == "default":
        return perturbation.DEFAULT_CUTOFF_CONSTANT
    if text == "dk":
        return perturbation.DAVIS_KAHAN_CONSTANT
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"constant must be 'default', 'dk', or a positive number, got {text!r}"
        ) from None
    if not (math.isfinite(value) and value > 0):
        raise argparse.ArgumentTypeError(f"constant must be positive and finite, got {text}")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def read_numeric_csv(path: str) -> tuple[list[str], np.ndarray]:
    """Strict numeric CSV reader: header row, rectangular, finite."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise CsvFormatError(f"cannot read {path}: {exc.strerror or exc}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(f"{path}: file is empty") from None
        names = [h.strip() for h in header]
        if any(not name for name in names):
            raise CsvFormatError(f"{path}: header has a blank column name")
        if len(set(names)) != len(names):
            dupe = next(n for n in names if names.count(n) > 1)
            raise CsvFormatError(f"{path}: duplicate column name {dupe!r}")
        rows: list[list[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(names):
                raise CsvFormatError(
                    f"{path}:{lineno}: expected {len(names)} fields, got {len(row)}"
                )
            values = []
            for name, text in zip(names, row):
                try:
                    value = float(text)
                except ValueError:
                    raise CsvFormatError(
                        f"{path}:{lineno}: column {name!r} has non-numeric value {text.strip()!r}"
                    ) from None
                if not math.isfinite(value):
                    raise CsvFormatError(
                        f"{path}:{lineno}: column {name!r} has non-finite value {text.strip()!r}"
                    )
                values.append(value)
            rows.append(values)
        if not rows:
            raise CsvFormatError(f"{path}: no data rows after the header")
    return names, np.array(rows, dtype=np.float64)


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        f = float(value)
        return f if math.isfinite(f) else None
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    return value


def _json_text(payload: dict) -> str:
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _csv_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def _csv_text(fieldnames: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fieldnames)
    for row in rows:
        writer.writerow([_csv_cell(row[name]) for name in fieldnames])
    return buf.getvalue()


def write_text(path: str | None, text: str) -> None:
    """Write to stdout, or atomically replace ``path``."""
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    target = os.path.abspath(path)
    fd, tmp = tempfile.mkstemp(
        dir=os.path.dirname(target), prefix=os.path.basename(target) + ".", suffix=".tmp"
    )
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


def _resolve_input(args) -> str:
    if args.csv is not None and args.input_flag is not None:
        raise _UsageError("give the CSV path either positionally or via --input, not both")
    path = args.csv if args.csv is not None else args.input_flag
    if path is None:
        raise _UsageError("a CSV path is required (positional or --input)")
    return path


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("PLA_SEED")
    if env is None:
        raise _UsageError("--seed is required (or set PLA_SEED)")
    try:
        return int(env)
    except ValueError:
        raise _UsageError(f"PLA_SEED must be an integer, got {env!r}") from None


def _join_ints(values) -> str:
    return ";".join(str(int(v)) for v in values)


def _candidate_payload(report: pla.PlaReport) -> list[dict]:
    out = []
    for cand in report.candidates:
        names = (
            [report.columns[i] for i in cand.variables] if report.columns else None
        )
        out.append(
            {
                "variables": list(cand.variables),
                "names": names,
                "eigen_indices": list(cand.eigen_indices),
                "max_cross_loading": cand.max_cross_loading,
                "explained_exact": cand.explained_exact,
                "explained_approx": cand.explained_approx,
            }
        )
    return out


def cmd_pla(args) -> int:
    path = _resolve_input(args)
    names, data = read_numeric_csv(path)
    report = pla.run_pla(data, basis=args.basis, tau=args.tau, columns=names)
    if args.format == "csv":
        rows = [
            {
                "candidate": i,
                "variables": _join_ints(c.variables),
                "names": ";".join(names[j] for j in c.variables),
                "eigen_indices": _join_ints(c.eigen_indices),
                "max_cross_loading": c.max_cross_loading,
                "explained_exact": c.explained_exact,
                "explained_approx": c.explained_approx,
            }
            for i, c in enumerate(report.candidates)
        ]
        text = _csv_text(
            [
                "candidate",
                "variables",
                "names",
                "eigen_indices",
                "max_cross_loading",
                "explained_exact",
                "explained_approx",
            ],
            rows,
        )
    else:
        text = _json_text(
            {
                "schema_version": SCHEMA_VERSION,
                "command": "pla",
                "input": path,
                "basis": args.basis,
                "tau": args.tau,
                "n_rows": int(data.shape[0]),
                "columns": names,
                "eigenvalues": report.eigen.values,
                "zero_variance": list(report.zero_variance),
                "candidates": _candidate_payload(report),
                "discard_set": list(report.discard_set()),
            }
        )
    write_text(args.output, text)
    return 0


def cmd_compare(args) -> int:
    path = _resolve_input(args)
    names, data = read_numeric_csv(path)
    if args.response is None:
        response_idx = len(names) - 1
    elif args.response in names:
        response_idx = names.index(args.response)
    else:
        raise _UsageError(f"response column {args.response!r} not found in the CSV header")
    report = pla.run_pla(data, basis=args.basis, tau=args.tau, columns=names)
    pla_discards = set(report.discard_set(exclude=response_idx))
    predictors = [i for i in range(len(names)) if i != response_idx]
    x = data[:, predictors]
    y = data[:, response_idx]
    fit = ols_fit(linalg.mean_center(x), y - y.mean())
    ols_local = set(discard_by_ols(fit, args.alpha))
    rows = []
    counts = {"both": 0, "pla_only": 0, "ols_only": 0, "neither": 0}
    for j, idx in enumerate(predictors):
        in_pla = idx in pla_discards
        in_ols = j in ols_local
        if in_pla and in_ols:
            agreement = "both"
        elif in_pla:
            agreement = "pla_only"
        elif in_ols:
            agreement = "ols_only"
        else:
            agreement = "neither"
        counts[agreement] += 1
        rows.append(
            {
                "index": idx,
                "name": names[idx],
                "coefficient": float(fit.coefficients[j]),
                "t_stat": float(fit.t_stats[j]),
                "p_value": float(fit.p_values[j]),
                "pla_discard": in_pla,
                "ols_discard": in_ols,
                "agreement": agreement,
            }
        )
    if args.format == "csv":
        text = _csv_text(
            [
                "index",
                "name",
                "coefficient",
                "t_stat",
                "p_value",
                "pla_discard",
                "ols_discard",
                "agreement",
            ],
            rows,
        )
    else:
        text = _json_text(
            {
                "schema_version": SCHEMA_VERSION,
                "command": "compare",
                "input": path,
                "response": names[response_idx],
                "basis": args.basis,
                "tau": args.tau,
                "alpha": args.alpha,
                "n_rows": int(data.shape[0]),
                "variables": rows,
                "candidates": _candidate_payload(report),
                "agreement_counts": counts,
            }
        )
    write_text(args.output, text)
    return 0


def _build_split_pair(pop, n: int, seed: int):
    seq = simulation.trial_substream(seed, 0, 0)
    base_child, pert_child = seq.spawn(2)
    base = simulation.sample_gaussian(pop, n, simulation.stream_generator(base_child))
    pert = simulation.sample_gaussian(
        pop, n, simulation.stream_generator(pert_child), perturbed=True
    )
    cov_split = perturbation.split_sample(
        pop, linalg.sample_covariance(base), linalg.sample_covariance(pert)
    )
    corr_split = perturbation.split_sample_correlation(
        pop, linalg.sample_covariance(base), linalg.sample_covariance(pert)
    )
    return cov_split, corr_split


def cmd_bounds(args) -> int:
    seed = _resolve_seed(args)
    pop = simulation.make_population(
        args.m, args.d_size, signal=args.signal, perturb_eps=args.eps, seed=seed
    )
    cov_split, corr_split = _build_split_pair(pop, args.n, seed)
    if args.basis == "covariance":
        bounds = perturbation.cutoff_bounds(cov_split, constant=args.constant)
    else:
        bounds = perturbation.cutoff_bounds(
            corr_split, constant=args.constant, mode=args.corr_mode, cov_split=cov_split
        )
    rows = [
        {
            "eigen_index": int(bounds.delta_set[i]),
            "gap": float(bounds.gaps[i]),
            "lower": float(bounds.lower[i]),
            "upper_tight": float(bounds.upper_tight[i]),
            "upper_necessary": float(bounds.upper_necessary[i]),
            "upper_loose": float(bounds.upper_loose[i]),
        }
        for i in range(len(bounds.delta_set))
    ]
    if args.format == "csv":
        text = _csv_text(
            ["eigen_index", "gap", "lower", "upper_tight", "upper_necessary", "upper_loose"],
            rows,
        )
    else:
        text = _json_text(
            {
                "schema_version": SCHEMA_VERSION,
                "command": "bounds",
                "m": args.m,
                "d_size": args.d_size,
                "signal": args.signal,
                "eps": args.eps,
                "n": args.n,
                "seed": seed,
                "basis": args.basis,
                "corr_mode": args.corr_mode if args.basis == "correlation" else None,
                "constant": bounds.constant,
                "gap_convention": GAP_CONVENTION,
                "block": list(pop.d_set),
                "delta_set": list(bounds.delta_set),
                "rows": rows,
                "aggregates": {
                    "lower": bounds.agg_lower,
                    "upper_tight": bounds.agg_upper_tight,
                    "upper_necessary": bounds.agg_upper_necessary,
                    "upper_loose": bounds.agg_upper_loose,
                },
                "feasible": bounds.feasible,
                "reason": bounds.reason,
                "midpoint": bounds.midpoint,
            }
        )
    write_text(args.output, text)
    return 0


def cmd_simulate(args) -> int:
    if args.format == "csv":
        raise _UsageError(
            "simulate reports are JSON only; use --trials-csv PATH for per-trial rows"
        )
    seed = _resolve_seed(args)
    n_grid = args.n if args.n else [100, 400]
    pop = simulation.make_population(
        args.m, args.d_size, signal=args.signal, perturb_eps=args.eps, seed=seed
    )
    study = simulation.run_study(
        pop,
        n_grid,
        args.reps,
        seed,
        tau=args.tau,
        alpha=args.alpha,
        basis=args.basis,
        constant=args.constant,
        corr_mode=args.corr_mode,
        parallelism=args.parallel,
    )
    summary = simulation.summarize_study(study)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": "simulate",
        "m": args.m,
        "d_size": args.d_size,
        "signal": args.signal,
        "eps": args.eps,
        "block": list(pop.d_set),
        **summary,
    }
    if args.trials_csv:
        fields = [f.name for f in simulation.TrialOutcome.__dataclass_fields__.values()]
        trial_rows = [o.to_dict() for o in study.outcomes]
        write_text(args.trials_csv, _csv_text(fields, trial_rows))
    write_text(args.output, _json_text(payload))
    return 0


def _add_output_flags(sub, formats=("json", "csv")):
    sub.add_argument("--format", choices=formats, default="json", help="report format")
    sub.add_argument(
        "--output", "--out", metavar="PATH", help="write the report here instead of stdout"
    )


def _add_population_flags(sub):
    sub.add_argument("--m", type=_positive_int, default=4, help="number of predictors")
    sub.add_argument(
        "--d-size", type=_positive_int, default=1, help="size of the decoupled block"
    )
    sub.add_argument("--signal", type=float, default=0.8, help="response covariance strength")
    sub.add_argument("--eps", type=float, default=0.1, help="population perturbation weight")
    sub.add_argument(
        "--seed", type=int, default=None, help="master seed (falls back to PLA_SEED)"
    )
    sub.add_argument(
        "--basis",
        type=_basis,
        default="covariance",
        help="matrix scale for detection and bounds (covariance/cov or correlation/corr)",
    )
    sub.add_argument(
        "--constant",
        type=_constant,
        default=perturbation.DEFAULT_CUTOFF_CONSTANT,
        help="bound constant: 'default', 'dk', or a positive number",
    )
    sub.add_argument(
        "--corr-mode",
        choices=perturbation.VALID_ANGLE_MODES,
        default="proof",
        help="operand scale for correlation-basis conditions",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pla", description="Principal loading analysis toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p_pla = sub.add_parser("pla", help="detect discardable variable blocks in a CSV")
    p_pla.add_argument("csv", nargs="?", help="numeric CSV with a header row")
    p_pla.add_argument("--input", dest="input_flag", metavar="PATH", help="alternative to the positional CSV path")
    p_pla.add_argument("--basis", type=_basis, default="covariance",
                   help="covariance/cov or correlation/corr")
    p_pla.add_argument("--tau", type=_tau_number, default=0.0, help="loading cut-off in [0, 1)")
    _add_output_flags(p_pla)
    p_pla.set_defaults(func=cmd_pla)

    p_cmp = sub.add_parser("compare", help="compare loading-based and p-value discarding")
    p_cmp.add_argument("csv", nargs="?", help="numeric CSV with a header row")
    p_cmp.add_argument("--input", dest="input_flag", metavar="PATH", help="alternative to the positional CSV path")
    p_cmp.add_argument(
        "--response", default=None, help="response column name (default: last column)"
    )
    p_cmp.add_argument("--basis", type=_basis, default="covariance",
                   help="covariance/cov or correlation/corr")
    p_cmp.add_argument("--tau", type=_tau_number, default=0.0, help="loading cut-off in [0, 1)")
    p_cmp.add_argument("--alpha", type=float, default=0.05, help="p-value threshold")
    _add_output_flags(p_cmp)
    p_cmp.set_defaults(func=cmd_compare)

    p_bounds = sub.add_parser(
        "bounds", help="cut-off window for one synthetic population draw"
    )
    _add_population_flags(p_bounds)
    p_bounds.add_argument("--n", type=_positive_int, default=400, help="sample size")
    _add_output_flags(p_bounds)
    p_bounds.set_defaults(func=cmd_bounds)

    p_sim = sub.add_parser("simulate", help="Monte Carlo study over a sample-size grid")
    _add_population_flags(p_sim)
    p_sim.add_argument(
        "--n",
        type=_positive_int,
        action="append",
        metavar="N",
        help="sample size, repeatable (default: 100 and 400)",
    )
    p_sim.add_argument("--reps", type=_positive_int, default=20, help="replications per size")
    p_sim.add_argument(
        "--tau", type=_tau_or_auto, default="auto", help="loading cut-off or 'auto'"
    )
    p_sim.add_argument("--alpha", type=float, default=0.05, help="p-value threshold")
    p_sim.add_argument("--parallel", type=_positive_int, default=1, help="worker threads")
    p_sim.add_argument(
        "--trials-csv", metavar="PATH", help="also write one CSV row per trial"
    )
    _add_output_flags(p_sim)
    p_sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except CsvFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (
        NotCenteredError,
        StructuralZeroError,
        BlockMismatchError,
        ConstructionError,
        DegenerateDataError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (SingularMatrixError, NumericalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


def run(argv=None) -> None:
    raise SystemExit(main(argv))
