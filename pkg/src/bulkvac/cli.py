"""Command line: ``bulkvac analyze|simulate|compare|sweep``.

Exit codes: 0 success, 2 configuration or parameter error, 3 unstable
model, 4 numerical failure.  ``BULKVAC_LOG`` sets the log level.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .comparison import compare
from .config import RunConfig, example_names, example_path, load_config, parse_config, resolve_path, set_pointer
from .errors import BulkVacError, ConfigError, InstabilityError
from .model import rho
from .pipeline import Solution, solve
from .results import ArbitraryDistribution, DepartureDistribution
from .serialize import CSV_DECIMALS, arbitrary_table, csv_text, departure_table, solution_to_json, write_csv
from .simulator import SimConfig, SimulationEstimate, simulate

log = logging.getLogger("bulkvac")

PERCENT_MEASURES = {"esf", "p_idle", "p_busy_fes", "p_busy_sos"}


def _measure_rows(sol: Solution) -> list[tuple[str, float]]:
    rows = [("rho", rho(sol.spec))]
    rows += list(sol.report.scalars().items())
    return rows


def _print_measures(rows, stream=sys.stdout) -> None:
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        shown = f"{v:.{CSV_DECIMALS}f}"
        if k in PERCENT_MEASURES:
            shown += f"  ({100 * v:.4f}%)"
        print(f"{k:<{width}}  {shown}", file=stream)


def _outdir(path: str | None) -> Path | None:
    if path is None:
        return None
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args) -> RunConfig:
    cfg = load_config(args.config)
    if getattr(args, "engine", None):
        cfg = replace(cfg, engine=args.engine)
    sim = cfg.simulation
    overrides = {k: getattr(args, k, None) for k in ("slots", "warmup", "seed", "replications")}
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if overrides:
        try:
            sim = replace(sim, **overrides)
        except Exception as exc:  # SimConfig validation
            raise ConfigError(str(exc), "/simulation") from exc
        cfg = replace(cfg, simulation=sim)
    return cfg


def cmd_analyze(args) -> int:
    cfg = _load(args)
    sol = solve(cfg.spec, cfg.engine, cfg.n_max)
    spec = sol.spec
    out = _outdir(args.out)
    rows = _measure_rows(sol)
    if out is None:
        if args.format == "json":
            print(solution_to_json(sol.departure, sol.arbitrary, sol.report))
        else:
            _print_measures(rows)
        return 0
    if args.format == "json":
        (out / "solution.json").write_text(solution_to_json(sol.departure, sol.arbitrary, sol.report))
    else:
        write_csv(out / "departure.csv", *departure_table(sol.departure, spec.a, spec.b))
        write_csv(out / "arbitrary.csv", *arbitrary_table(sol.arbitrary, sol.report, spec.a, spec.b))
        write_csv(out / "measures.csv", ["measure", "value"], rows)
    _print_measures(rows)
    return 0


def _estimate_rows(est: SimulationEstimate) -> list[tuple[str, float]]:
    lq = float(np.arange(est.psi_queue.size) @ est.psi_queue)
    return [
        ("mean_wait", est.mean_wait),
        ("mean_wait_se", est.mean_wait_se),
        ("Lq", lq),
        ("E_I", est.mean_idle),
        ("E_I_se", est.mean_idle_se),
        ("esf", float(est.theta.sum() + est.gamma.sum())),
        ("departures_per_slot", est.departures_per_slot),
        ("departures_per_slot_se", est.departures_per_slot_se),
        ("arrivals_per_slot", est.arrivals_per_slot),
        ("p_busy_fes", float(est.alpha.sum())),
        ("p_busy_sos", float(est.beta.sum())),
    ]


def cmd_simulate(args) -> int:
    cfg = _load(args)
    est = simulate(cfg.spec, cfg.simulation)
    rows = _estimate_rows(est)
    out = _outdir(args.out)
    if out is not None:
        if args.format == "json":
            doc = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in vars(est).items()}
            (out / "estimate.json").write_text(json.dumps(doc))
        else:
            a, b = cfg.spec.a, cfg.spec.b
            dep_like = _EstimateView(est)
            write_csv(out / "departure.csv", *departure_table(dep_like.departure(), a, b))
            write_csv(out / "arbitrary.csv", *arbitrary_table(dep_like.arbitrary(), dep_like.report(), a, b))
            write_csv(out / "measures.csv", ["measure", "value"], rows)
    _print_measures(rows)
    return 0


class _EstimateView:
    """Adapts an estimate to the analytic table writers."""

    def __init__(self, est: SimulationEstimate):
        self.est = est

    def departure(self):
        e = self.est
        return DepartureDistribution(e.alpha_plus, e.beta_plus, e.gamma_plus, e.theta, engine="simulation")

    def arbitrary(self):
        e = self.est
        return ArbitraryDistribution(e.theta, e.alpha, e.beta, e.gamma, engine="simulation")

    def report(self):
        return argparse.Namespace(psi_queue=self.est.psi_queue, psi_sys=self.est.psi_sys)


def cmd_compare(args) -> int:
    cfg = _load(args)
    sol = solve(cfg.spec, cfg.engine, cfg.n_max)
    est = simulate(cfg.spec, cfg.simulation)
    checks = compare(sol, est)
    header = ["check", "analytic", "simulated", "error", "tolerance", "verdict"]
    rows = [[c.name, c.analytic, c.simulated, c.error, c.tolerance, "PASS" if c.passed else "FAIL"] for c in checks]
    out = _outdir(args.out)
    if out is not None:
        if args.format == "json":
            (out / "compare.json").write_text(json.dumps([dict(zip(header, r)) for r in rows]))
        else:
            write_csv(out / "compare.csv", header, rows)
    sys.stdout.write(csv_text(header, rows))
    return 0


def _parse_values(text: str) -> list:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            out.append(json.loads(tok))
        except json.JSONDecodeError:
            out.append(tok)
    if not out:
        raise ConfigError("--values must list at least one value", "")
    return out


def _sweep_point(doc: dict, pointer: str, value):
    """Returns ``(value, status, rows)``; runs in a worker process."""
    try:
        cfg = parse_config(set_pointer(doc, pointer, value))
        sol = solve(cfg.spec, cfg.engine, cfg.n_max)
        return value, "OK", _measure_rows(sol)
    except InstabilityError as exc:
        return value, "UNSTABLE", [("rho", exc.rho)]
    except ConfigError:
        raise
    except BulkVacError as exc:
        return value, "ERROR", [("error", str(exc))]


def _sort_key(v):
    return (0, v, "") if isinstance(v, (int, float)) else (1, 0, str(v))


def run_sweep(doc: dict, pointer: str, values: list, jobs: int = 1):
    """Solve every sweep point; rows are sorted by parameter value."""
    set_pointer(doc, pointer, values[0])  # fail fast on a bad path
    if jobs > 1 and len(values) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_point, [doc] * len(values), [pointer] * len(values), values))
    else:
        results = [_sweep_point(doc, pointer, v) for v in values]
    results.sort(key=lambda r: _sort_key(r[0]))
    rows = []
    for value, status, measures in results:
        if status == "OK":
            rows += [[pointer, value, k, v, status] for k, v in measures]
        else:
            rows += [[pointer, value, k, v if isinstance(v, float) else float("nan"), status] for k, v in measures]
    return rows


def cmd_sweep(args) -> int:
    load_config(args.config)  # schema check of the base document
    doc = json.loads(resolve_path(args.config).read_text())
    if args.engine:
        doc["engine"] = args.engine
    values = _parse_values(args.values)
    rows = run_sweep(doc, args.param, values, args.jobs)
    header = ["param", "value", "measure", "result", "status"]
    out = _outdir(args.out)
    if args.format == "json":
        text = json.dumps([dict(zip(header, r)) for r in rows])
        name = "sweep.json"
    else:
        text = csv_text(header, rows)
        name = "sweep.csv"
    if out is not None:
        (out / name).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_examples(args) -> int:
    for name in example_names():
        print(example_path(name))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bulkvac", description="Batch-service queue with optional second service and vacations.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, engine=True):
        p.add_argument("--config", required=True, help="JSON configuration file")
        p.add_argument("--out", help="output directory (default: print to stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        if engine:
            p.add_argument("--engine", choices=("analytic", "truncated"))

    def sim_flags(p):
        p.add_argument("--slots", type=int)
        p.add_argument("--warmup", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--replications", type=int)

    p = sub.add_parser("analyze", help="solve a model and write tables and measures")
    common(p)
    p.set_defaults(func=cmd_analyze)
    p = sub.add_parser("simulate", help="estimate the distributions by simulation")
    common(p, engine=False)
    sim_flags(p)
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("compare", help="analytic solution against simulation")
    common(p)
    sim_flags(p)
    p.set_defaults(func=cmd_compare)
    p = sub.add_parser("sweep", help="solve over a list of values of one parameter")
    common(p)
    p.add_argument("--param", required=True, help="JSON pointer into the configuration, e.g. /model/lambda")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("examples", help="list the shipped example configurations")
    p.set_defaults(func=cmd_examples)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("BULKVAC_LOG", "WARNING").upper(), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BulkVacError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
