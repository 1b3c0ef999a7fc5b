"""``crossdex`` command line.

Exit codes: 0 ok, 1 usage, 2 data/config error, 3 run completed with failed sessions.
"""
from __future__ import annotations

import argparse
import dataclasses
import datetime as dt
import json
import logging
import platform
import sys
import time
from pathlib import Path

from . import __version__, synth
from .config import ConfigError, ExperimentConfig, load_config
from .harness import compare_cross_vs_ablation, run_experiment
from .report import EmptyReportError, full_report, wilcoxon_table
from .series import SeriesError, correlation_table, load_series, save_series, write_correlations
from .storage import SchemaVersionError, load_results, persist_results
from .windowing import PlanningError, WindowConfig, plan_sessions

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_FAILURES = 0, 1, 2, 3

log = logging.getLogger("crossdex")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _named_path(arg: str) -> tuple[str, Path]:
    if "=" in arg:
        name, path = arg.split("=", 1)
        return name, Path(path)
    return Path(arg).stem, Path(arg)


# -- subcommands ----------------------------------------------------------------

def cmd_ingest_check(args) -> int:
    cfg = WindowConfig()
    for arg in args.paths:
        name, path = _named_path(arg)
        s = load_series(path, name)
        try:
            pairs = plan_sessions(len(s), cfg).n_pairs
        except PlanningError:
            pairs = 0
        print(f"{name}: {len(s)} rows, {s.dates[0]} .. {s.dates[-1]}, {pairs} train/test session pairs")
    return EXIT_OK


def cmd_correlate(args) -> int:
    if len(args.paths) < 2:
        raise UsageError("correlate needs at least two series")
    series = [load_series(p, n) for n, p in map(_named_path, args.paths)]
    rows = correlation_table(series)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with out.open("w", newline="") as fh:
            write_correlations(rows, fh)
    write_correlations(rows, sys.stdout)
    return EXIT_OK


def _subset(cfg: ExperimentConfig, args) -> ExperimentConfig:
    changes = {}
    if args.models:
        wanted = _csv_list(args.models)
        unknown = set(wanted) - {m.kind for m in cfg.models}
        if unknown:
            raise ConfigError(f"--models: not in config: {', '.join(sorted(unknown))}")
        changes["models"] = tuple(m for m in cfg.models if m.kind in wanted)
    if args.indexes:
        wanted = _csv_list(args.indexes)
        unknown = set(wanted) - set(cfg.symbols)
        if unknown:
            raise ConfigError(f"--indexes: not in config: {', '.join(sorted(unknown))}")
        changes["indexes"] = tuple(i for i in cfg.indexes if i.symbol in wanted)
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out:
        changes["output_dir"] = args.out
    return dataclasses.replace(cfg, **changes) if changes else cfg


def cmd_run(args) -> int:
    cfg = _subset(load_config(args.config), args)
    out = Path(cfg.output_dir)
    if not out.is_absolute() and not args.out:
        out = Path(cfg.base_dir) / out
    started = dt.datetime.now(dt.timezone.utc)
    t0 = time.perf_counter()
    matrix = run_experiment(cfg)
    prov = {
        "started": started.isoformat(),
        "elapsed_s": round(time.perf_counter() - t0, 3),
        "threads": cfg.effective_threads(),
        "python": platform.python_version(),
        "crossdex": __version__,
    }
    persist_results(matrix, out, provenance=prov)
    n = len(matrix.records)
    print(f"wrote {n} session records for {len(cfg.models)} model(s) x {len(cfg.indexes)} index(es) to {out}")
    if matrix.failures:
        for r in matrix.failures:
            k = r.key
            print(f"FAILED {k.model} {k.train_index}->{k.test_index} session {k.session_id}: {r.error}",
                  file=sys.stderr)
        return EXIT_FAILURES
    return EXIT_OK


def cmd_wilcoxon(args) -> int:
    matrix = load_results(args.results)
    mus = args.mu if args.mu else matrix.meta.get("config", {}).get("mu_shifts", [0.0])
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    trains = _csv_list(args.indexes) if args.indexes else matrix.indexes
    for mu in mus:
        for train in trains:
            comps = compare_cross_vs_ablation(matrix, mu=mu, train_index=train)
            if args.models:
                comps = [c for c in comps if c.model in _csv_list(args.models)]
            if not comps:
                continue
            title = f"Trained on {train}, mu={mu:g}"
            text = wilcoxon_table(comps, args.format, title)
            if out:
                ext = "md" if args.format == "md" else "csv"
                (out / f"wilcoxon_{train}_mu{mu:g}.{ext}").write_text(text)
            if args.format == "csv":
                print(f"# {title}")
            print(text)
    return EXIT_OK


def cmd_report(args) -> int:
    matrix = load_results(args.results)
    files = full_report(matrix, args.format)
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        if out:
            (out / name).write_text(text)
        if not name.startswith("plot_"):
            print(text)
    if out:
        print(f"wrote {len(files)} file(s) to {out}")
    return EXIT_OK


def cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "gbm":
        made = [synth.gbm(args.n, seed=args.seed, name=args.name or "GBM")]
    elif args.kind == "correlated-gbm":
        try:
            made = list(synth.correlated_gbm(args.n, rho=args.rho, seed=args.seed))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    else:
        made = [synth.linear(args.n, seed=args.seed, name=args.name or "LINEAR")]
    for s in made:
        path = out / f"{s.name}.csv"
        save_series(s, path)
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="crossdex", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("ingest-check", help="validate date,close CSV files")
    s.add_argument("paths", nargs="+", help="CSV path or SYMBOL=path")
    s.set_defaults(func=cmd_ingest_check)

    s = sub.add_parser("correlate", help="pairwise Pearson correlation of index levels")
    s.add_argument("paths", nargs="+", help="CSV path or SYMBOL=path")
    s.add_argument("--out", help="also write the table to this CSV file")
    s.set_defaults(func=cmd_correlate)

    s = sub.add_parser("run", help="run an experiment from a TOML config")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", help="output directory (overrides experiment.output_dir)")
    s.add_argument("--models", help="comma-separated subset of the configured kinds")
    s.add_argument("--indexes", help="comma-separated subset of the configured symbols")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("wilcoxon", help="self-trained vs cross-trained signed-rank tests")
    s.add_argument("results", help="results directory or results.json")
    s.add_argument("--mu", type=float, action="append", help="location shift (repeatable)")
    s.add_argument("--models")
    s.add_argument("--indexes", help="training indexes to report")
    s.add_argument("--format", choices=("md", "csv"), default="csv")
    s.add_argument("--out")
    s.set_defaults(func=cmd_wilcoxon)

    s = sub.add_parser("report", help="accuracy tables, cross matrices and plot-ready traces")
    s.add_argument("results")
    s.add_argument("--format", choices=("md", "csv"), default="md")
    s.add_argument("--out")
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("synth", help="write synthetic index series")
    s.add_argument("--kind", choices=("gbm", "correlated-gbm", "linear"), default="gbm")
    s.add_argument("--n", type=int, default=2000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--rho", type=float, default=0.95)
    s.add_argument("--name")
    s.add_argument("--out", default=".")
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "n", 1) < 1:
        print("crossdex: error: --n must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"crossdex: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SeriesError, ConfigError, PlanningError, SchemaVersionError, EmptyReportError,
            FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"crossdex: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
