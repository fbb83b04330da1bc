"""Serialization of solutions: CSV tables and lossless JSON."""

from __future__ import annotations

import csv
import io as _io
import json
from dataclasses import asdict, fields

import numpy as np

from .measures import IdleBreakdown, PerformanceReport
from .results import ArbitraryDistribution, DepartureDistribution

CSV_DECIMALS = 6


def _fmt(x: float) -> str:
    return f"{x:.{CSV_DECIMALS}f}"


def departure_table(dep: DepartureDistribution, a: int, b: int) -> tuple[list[str], list[list[float]]]:
    """Rows ``n`` with alpha+_{n,r}, beta+_{n,y}, gamma+_n^[k] columns."""
    header = ["n"]
    header += [f"alpha_plus_{r}" for r in range(a, b + 1)]
    header += [f"beta_plus_{y}" for y in range(1, b + 1)]
    header += [f"gamma_plus_{k}" for k in range(a)]
    rows = []
    for n in range(dep.N + 1):
        rows.append([n, *dep.alpha_plus[n, a:], *dep.beta_plus[n, 1:], *dep.gamma_plus[n, :a]])
    return header, rows


def arbitrary_table(arb: ArbitraryDistribution, report: PerformanceReport, a: int, b: int):
    """Rows ``n`` with theta, alpha, beta, gamma, psi_queue and psi_sys columns."""
    header = ["n", "theta"]
    header += [f"alpha_{r}" for r in range(a, b + 1)]
    header += [f"beta_{y}" for y in range(1, b + 1)]
    header += [f"gamma_{k}" for k in range(a)]
    header += ["psi_queue", "psi_sys"]
    n_rows = max(arb.N + 1, report.psi_sys.size)
    rows = []
    at = lambda v, n: float(v[n]) if n < v.size else 0.0
    for n in range(n_rows):
        inside = n <= arb.N
        row = [n, at(arb.theta, n)]
        row += list(arb.alpha[n, a:]) if inside else [0.0] * (b - a + 1)
        row += list(arb.beta[n, 1:]) if inside else [0.0] * b
        row += list(arb.gamma[n, :a]) if inside else [0.0] * a
        row += [at(report.psi_queue, n), at(report.psi_sys, n)]
        rows.append(row)
    return header, rows


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([row[0], *(_fmt(x) if isinstance(x, float) else x for x in row[1:])])


def csv_text(header, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf)
    w.writerow(header)
    for row in rows:
        w.writerow([row[0], *(_fmt(x) if isinstance(x, float) else x for x in row[1:])])
    return buf.getvalue()


def _encode(obj):
    out = {}
    for f in fields(obj):
        v = getattr(obj, f.name)
        if isinstance(v, np.ndarray):
            out[f.name] = {"shape": list(v.shape), "data": v.ravel().tolist()}
        elif isinstance(v, IdleBreakdown):
            out[f.name] = asdict(v)
        else:
            out[f.name] = v
    return out


def _decode(cls, d: dict):
    kwargs = {}
    for f in fields(cls):
        v = d[f.name]
        if isinstance(v, dict) and "shape" in v:
            v = np.asarray(v["data"], dtype=float).reshape(v["shape"])
        elif f.name == "expected_idle":
            v = IdleBreakdown(**v)
        kwargs[f.name] = v
    return cls(**kwargs)


def solution_to_json(dep: DepartureDistribution, arb: ArbitraryDistribution, report: PerformanceReport) -> str:
    """Full-precision JSON (floats round-trip exactly through ``repr``)."""
    doc = {"departure": _encode(dep), "arbitrary": _encode(arb), "report": _encode(report)}
    return json.dumps(doc, allow_nan=True)


def solution_from_json(text: str):
    """Inverse of :func:`solution_to_json`."""
    doc = json.loads(text)
    return (
        _decode(DepartureDistribution, doc["departure"]),
        _decode(ArbitraryDistribution, doc["arbitrary"]),
        _decode(PerformanceReport, doc["report"]),
    )
