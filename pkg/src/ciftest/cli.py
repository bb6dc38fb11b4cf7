"""Batch front-end: dataset ingestion, tests, simulations and reports.

The ``test`` subcommand ingests a CSV of (entry, time, status, group)
records, runs the requested equality tests between the two groups and
writes a human-readable table, optionally mirrored as JSON and as CSV
tables plus a rendered CIF figure.  ``simulate`` replays a scenario file
through the Monte Carlo harness.  ``plot-data`` emits the per-group CIF
step curves (and the figure) without running any test.

Reports are reproducible: the provenance block carries every input
needed to regenerate the numbers, and repeated invocations with the same
flags and seed produce byte-identical JSON.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .approximation import box_test, pearson_test
from .covariance import covariance_moments, group_covariance, pooled_covariance
from .errors import (
    CifTestError,
    EmptyRiskSet,
    MoreThanTwoGroups,
    ParseError,
    UnknownColumn,
)
from .resampling import BootstrapConfig, MultiplierLaw, TestResult, bootstrap_tests
from .seeding import spawn_seed
from .simulation import METHODS, load_scenario, monte_carlo
from .statistics import StatKind, cvm_stat, w_process
from .survival import (
    Grid,
    Jitter,
    Reject,
    Sample,
    Status,
    Subject,
    aalen_johansen,
    event_grid,
    validate_sample,
)
from .weights import AndersonDarlingWeight, ConstantWeight, Weight

__all__ = [
    "ColumnMapping",
    "Dataset",
    "ReportBundle",
    "read_dataset",
    "dataset_samples",
    "run_test",
    "run_simulation",
    "emit_plot_data",
    "main",
]

_BOOTSTRAP_KINDS = {"ks": StatKind.KS, "cvm": StatKind.CVM, "pepe": StatKind.PEPE}


@dataclass(frozen=True)
class ColumnMapping:
    """Names of the input columns; a missing entry column means entry 0."""

    entry: str = "entry"
    time: str = "time"
    status: str = "status"
    group: str = "group"


@dataclass(frozen=True)
class DatasetRecord:
    entry: float
    time: float
    status: int
    group: str


@dataclass(frozen=True)
class Dataset:
    records: tuple[DatasetRecord, ...]
    mapping: ColumnMapping
    groups: tuple[str, str]
    source: str = ""

    def group_size(self, label: str) -> int:
        return sum(1 for r in self.records if r.group == label)


def read_dataset(
    path,
    mapping: ColumnMapping = ColumnMapping(),
    filters: tuple[tuple[str, str], ...] = (),
    group_order: tuple[str, str] | None = None,
) -> Dataset:
    """Read and validate a delimited dataset.

    ``filters`` are equality predicates on raw columns applied before
    anything else (e.g. restrict to one gender before comparing transplant
    types).  After filtering, the group column must take exactly two
    values; ``group_order`` fixes which label becomes group 1 (the sign
    convention of the difference process), defaulting to sorted order.
    Rows failing validation abort the load with their line numbers.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ParseError(1, "empty file")
        header = set(reader.fieldnames)
        for column in (mapping.time, mapping.status, mapping.group):
            if column not in header:
                raise UnknownColumn(f"column {column!r} not found in {path.name}")
        for column, _ in filters:
            if column not in header:
                raise UnknownColumn(f"filter column {column!r} not found")
        has_entry = mapping.entry in header

        records = []
        problems = []
        for lineno, row in enumerate(reader, start=2):
            if any(row[col] != value for col, value in filters):
                continue
            try:
                entry = float(row[mapping.entry]) if has_entry else 0.0
                time_ = float(row[mapping.time])
                status = int(row[mapping.status])
            except (TypeError, ValueError):
                problems.append((lineno, "malformed numeric field"))
                continue
            if status not in (0, 1, 2):
                problems.append((lineno, f"status {status} not in {{0, 1, 2}}"))
                continue
            if entry < 0 or not time_ > entry:
                problems.append((lineno, f"need 0 <= entry < time, got {entry}, {time_}"))
                continue
            records.append(DatasetRecord(entry, time_, status, row[mapping.group]))

    if problems:
        lines = "; ".join(f"line {ln}: {msg}" for ln, msg in problems[:5])
        more = f" (+{len(problems) - 5} more)" if len(problems) > 5 else ""
        raise ParseError(problems[0][0], f"{lines}{more}")

    labels = sorted({r.group for r in records})
    if len(labels) != 2:
        raise MoreThanTwoGroups(
            f"need exactly two groups after filtering, got {labels!r}"
        )
    if group_order is not None:
        if sorted(group_order) != labels:
            raise MoreThanTwoGroups(
                f"requested groups {group_order!r} do not match data groups {labels!r}"
            )
        labels = list(group_order)
    return Dataset(tuple(records), mapping, (labels[0], labels[1]), str(path))


def dataset_samples(dataset: Dataset, tie_policy) -> tuple[Sample, Sample]:
    """Split a dataset into two validated samples (group order preserved)."""
    samples = []
    for label in dataset.groups:
        subjects = [
            Subject(r.entry, r.time, Status(r.status))
            for r in dataset.records
            if r.group == label
        ]
        samples.append(validate_sample(subjects, tie_policy, label=label))
    return samples[0], samples[1]


@dataclass(frozen=True)
class ReportBundle:
    """Test results plus CIF curves and the provenance to regenerate them."""

    results: dict[str, TestResult]
    curves: dict[str, list[tuple[float, float]]]
    provenance: dict

    def to_json(self) -> str:
        payload = {
            "provenance": self.provenance,
            "results": {
                method: {
                    "statistic": r.statistic,
                    "critical": r.critical,
                    "p_value": r.p_value,
                    "reject": r.reject,
                    "extras": r.extras,
                }
                for method, r in self.results.items()
            },
            "curves": {g: [[t, f] for t, f in pts] for g, pts in self.curves.items()},
        }
        return json.dumps(payload, sort_keys=True, indent=2, default=_json_default)

    def table(self) -> str:
        lines = [f"{'method':<9} {'statistic':>12} {'critical':>12} {'p-value':>9} reject"]
        for method, r in self.results.items():
            lines.append(
                f"{method:<9} {r.statistic:>12.6g} {r.critical:>12.6g} "
                f"{r.p_value:>9.4g} {'yes' if r.reject else 'no'}"
            )
        return "\n".join(lines)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _cif_curves(sample1: Sample, sample2: Sample, grid: Grid):
    curves = {}
    for sample in (sample1, sample2):
        values = aalen_johansen(sample, 1)(grid.points)
        curves[sample.label] = [
            (float(t), float(v)) for t, v in zip(grid.points, values)
        ]
    return curves


def default_interval(sample1: Sample, sample2: Sample) -> tuple[float, float]:
    """``[0, min over groups of the largest observed event time]``."""
    maxima = []
    for sample in (sample1, sample2):
        times, _ = sample.event_table()
        if len(times) == 0:
            raise CifTestError(
                f"sample {sample.label!r} has no observed events; specify --interval"
            )
        maxima.append(times[-1])
    return 0.0, float(min(maxima))


def run_test(
    dataset: Dataset,
    interval: tuple[float, float] | None = None,
    methods: tuple[str, ...] = METHODS,
    weight: Weight = ConstantWeight(),
    bootstrap: BootstrapConfig = BootstrapConfig(),
    tie_policy=None,
    warn=lambda msg: print(msg, file=sys.stderr),
) -> ReportBundle:
    """Run the requested tests between the two groups of a dataset.

    The same weight is used for all statistics.  A user-supplied interval
    failing the risk-set check produces a warning, not an error.  Results
    are deterministic given the bootstrap seed (which also seeds the tie
    jitter).
    """
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise CifTestError(f"unknown methods {sorted(unknown)}")
    if tie_policy is None:
        tie_policy = Jitter(spawn_seed(bootstrap.seed, 9))
    sample1, sample2 = dataset_samples(dataset, tie_policy)
    user_interval = interval is not None
    if interval is None:
        interval = default_interval(sample1, sample2)
    try:
        grid = event_grid(sample1, sample2, interval, check_risk_set=True)
    except EmptyRiskSet as exc:
        if not user_interval:
            raise
        warn(f"warning: {exc}; continuing with the requested interval")
        grid = event_grid(sample1, sample2, interval, check_risk_set=False)

    results: dict[str, TestResult] = {}
    boot_methods = [m for m in methods if m in _BOOTSTRAP_KINDS]
    if boot_methods:
        kinds = [_BOOTSTRAP_KINDS[m] for m in boot_methods]
        boot_results = bootstrap_tests(
            sample1, sample2, interval, kinds,
            {kind: weight for kind in kinds}, bootstrap,
            check_risk_set=False, grid=grid,
        )
        for method in boot_methods:
            results[method] = boot_results[_BOOTSTRAP_KINDS[method]]

    if "box" in methods or "pearson" in methods:
        z = pooled_covariance(
            group_covariance(sample1, grid),
            group_covariance(sample2, grid),
            sample1.n,
            sample2.n,
        )
        mu, sigma2, gamma = covariance_moments(z, weight)
        t_cvm = cvm_stat(w_process(sample1, sample2, grid), weight).value
        if "box" in methods:
            results["box"] = box_test(t_cvm, mu, sigma2, bootstrap.alpha)
        if "pearson" in methods:
            results["pearson"] = pearson_test(t_cvm, mu, sigma2, gamma, bootstrap.alpha)

    ordered = {m: results[m] for m in methods if m in results}
    provenance = {
        "version": __version__,
        "source": dataset.source,
        "groups": {label: dataset.group_size(label) for label in dataset.groups},
        "group_order": list(dataset.groups),
        "interval": [float(interval[0]), float(interval[1])],
        "methods": list(methods),
        "B": bootstrap.B,
        "alpha": bootstrap.alpha,
        "seed": bootstrap.seed,
        "multiplier": bootstrap.law.value,
        "weight": weight.describe(),
        "tie_policy": (
            f"jitter(seed={tie_policy.seed})"
            if isinstance(tie_policy, Jitter)
            else "reject"
        ),
    }
    return ReportBundle(ordered, _cif_curves(sample1, sample2, grid), provenance)


def emit_plot_data(
    dataset: Dataset,
    interval: tuple[float, float] | None = None,
    tie_policy=None,
    seed: int = 0,
) -> dict[str, list[tuple[float, float]]]:
    """Per-group cause-1 CIF step curves on the event grid."""
    if tie_policy is None:
        tie_policy = Jitter(spawn_seed(seed, 9))
    sample1, sample2 = dataset_samples(dataset, tie_policy)
    if interval is None:
        interval = default_interval(sample1, sample2)
    grid = event_grid(sample1, sample2, interval, check_risk_set=False)
    return _cif_curves(sample1, sample2, grid)


def write_report_files(bundle: ReportBundle, out_dir) -> list[Path]:
    """Write results.csv, cif_curves.csv and the rendered figure."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    results_path = out_dir / "results.csv"
    with open(results_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "statistic", "critical", "p_value", "reject"])
        for method, r in bundle.results.items():
            writer.writerow(
                [method, repr(r.statistic), repr(r.critical), repr(r.p_value),
                 int(r.reject)]
            )
    written.append(results_path)

    curves_path = out_dir / "cif_curves.csv"
    written.append(curves_path)
    write_curve_csv(bundle.curves, curves_path)

    figure_path = out_dir / "cif_curves.png"
    render_cif_figure(bundle.curves, figure_path)
    written.append(figure_path)
    return written


def write_curve_csv(curves, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group", "time", "cif"])
        for label, points in curves.items():
            for t, value in points:
                writer.writerow([label, repr(t), repr(value)])


def render_cif_figure(curves, path) -> None:
    """Render the per-group CIF step curves to an image file."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    styles = ["-", "--"]
    for style, (label, points) in zip(styles, curves.items()):
        t = [p[0] for p in points]
        f = [p[1] for p in points]
        ax.step(t, f, where="post", linestyle=style, label=label)
    ax.set_xlabel("time")
    ax.set_ylabel("cumulative incidence (cause 1)")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def run_simulation(scenario_file, out_csv=None, n_jobs: int = 1):
    """Load a scenario file, run the harness and write the CSV table."""
    scenario = load_scenario(scenario_file)
    table = monte_carlo(scenario, n_jobs=n_jobs)
    if out_csv is None:
        out_csv = Path(f"{scenario.scenario_id}_rejections.csv")
    table.write_csv(out_csv)
    return scenario, table, Path(out_csv)


# -- argument parsing ---------------------------------------------------------


def _dataset_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("data", help="CSV file with one row per subject")
    parser.add_argument("--entry-col", default="entry")
    parser.add_argument("--time-col", default="time")
    parser.add_argument("--status-col", default="status")
    parser.add_argument("--group-col", default="group")
    parser.add_argument(
        "--filter",
        action="append",
        default=[],
        metavar="COL=VALUE",
        help="keep only rows where a raw column equals a value (repeatable)",
    )
    parser.add_argument(
        "--groups",
        metavar="G1,G2",
        help="explicit group order (group 1 first); default: sorted labels",
    )
    parser.add_argument(
        "--interval", nargs=2, type=float, metavar=("T1", "T2"), default=None
    )
    parser.add_argument(
        "--tie-policy", choices=["jitter", "reject"], default="jitter"
    )


def _read_dataset_from_args(args) -> Dataset:
    mapping = ColumnMapping(
        entry=args.entry_col,
        time=args.time_col,
        status=args.status_col,
        group=args.group_col,
    )
    filters = []
    for item in args.filter:
        if "=" not in item:
            raise CifTestError(f"--filter expects COL=VALUE, got {item!r}")
        col, value = item.split("=", 1)
        filters.append((col, value))
    group_order = None
    if args.groups:
        parts = args.groups.split(",")
        if len(parts) != 2:
            raise CifTestError("--groups expects two comma-separated labels")
        group_order = (parts[0], parts[1])
    return read_dataset(args.data, mapping, tuple(filters), group_order)


def _tie_policy_from_args(args, seed: int):
    if args.tie_policy == "reject":
        return Reject()
    return Jitter(spawn_seed(seed, 9))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ciftest",
        description="Two-sample equality tests for cumulative incidence functions",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    test = sub.add_parser("test", help="run the equality tests on a dataset")
    _dataset_arguments(test)
    test.add_argument(
        "--methods",
        default="ks,cvm,box,pearson,pepe",
        help="comma-separated subset of ks,cvm,box,pearson,pepe",
    )
    test.add_argument("--B", type=int, default=999, help="bootstrap replicates")
    test.add_argument("--alpha", type=float, default=0.05)
    test.add_argument("--seed", type=int, default=0)
    test.add_argument(
        "--multiplier", choices=["normal", "rademacher", "poisson"], default="normal"
    )
    test.add_argument("--weight", choices=["const", "ad"], default="const")
    test.add_argument("--json", action="store_true", help="print the report as JSON")
    test.add_argument("--out-dir", default=None, help="write CSV tables and figure here")

    sim = sub.add_parser("simulate", help="run a Monte Carlo scenario file")
    sim.add_argument("scenario", help="key = value scenario file")
    sim.add_argument("--out", default=None, help="output CSV path")
    sim.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    plot = sub.add_parser("plot-data", help="emit per-group CIF curves")
    _dataset_arguments(plot)
    plot.add_argument("--seed", type=int, default=0)
    plot.add_argument("--out-dir", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "test":
            dataset = _read_dataset_from_args(args)
            config = BootstrapConfig(
                B=args.B,
                law=MultiplierLaw(args.multiplier),
                alpha=args.alpha,
                seed=args.seed,
            )
            weight = ConstantWeight() if args.weight == "const" else AndersonDarlingWeight()
            methods = tuple(args.methods.replace(",", " ").split())
            bundle = run_test(
                dataset,
                interval=tuple(args.interval) if args.interval else None,
                methods=methods,
                weight=weight,
                bootstrap=config,
                tie_policy=_tie_policy_from_args(args, args.seed),
            )
            if args.out_dir:
                write_report_files(bundle, args.out_dir)
            if args.json:
                print(bundle.to_json())
            else:
                print(bundle.table())
            return 0

        if args.command == "simulate":
            scenario, table, out_path = run_simulation(
                args.scenario, args.out, n_jobs=args.jobs
            )
            print(f"scenario {scenario.scenario_id}: n_sim={scenario.n_sim}, "
                  f"B={scenario.bootstrap.B}, alpha={scenario.bootstrap.alpha}, "
                  f"seed={scenario.bootstrap.seed}")
            for row in table.rows:
                print(f"  {row.test:<8} rejection {row.proportion:.3f} "
                      f"(se {row.se:.3f}) in {row.wallclock_s:.1f}s")
            print(f"written: {out_path}")
            return 0

        if args.command == "plot-data":
            dataset = _read_dataset_from_args(args)
            curves = emit_plot_data(
                dataset,
                interval=tuple(args.interval) if args.interval else None,
                tie_policy=_tie_policy_from_args(args, args.seed),
                seed=args.seed,
            )
            out_dir = Path(args.out_dir)
            out_dir.mkdir(parents=True, exist_ok=True)
            write_curve_csv(curves, out_dir / "cif_curves.csv")
            render_cif_figure(curves, out_dir / "cif_curves.png")
            print(f"written: {out_dir / 'cif_curves.csv'}, {out_dir / 'cif_curves.png'}")
            return 0
    except CifTestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
