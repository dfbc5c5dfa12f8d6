"""CSV writers for analysis reports, simulation tables and replicate dumps.

Floats are written in their shortest round-trip form, so identical inputs give
identical bytes and reading a report back recovers the exact values;
undefined values (an infeasible side, a missing bootstrap) are left empty.
"""
from __future__ import annotations

import csv
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

REPORT_COLUMNS = (
    "method", "basis", "delta", "lambda",
    "mu1_lo", "mu1_hi", "mu0_lo", "mu0_hi",
    "psi_lo", "psi_hi", "length", "status",
    "feasible_count", "boot_lower", "boot_upper",
)
SIMULATION_COLUMNS = (
    "scenario", "method", "basis", "delta", "lambda",
    "avg_lo", "avg_hi", "length", "coverage", "feasible_count", "replicates", "true_ate",
)
REPLICATE_COLUMNS = ("scenario", "replicate", "method", "basis", "delta", "lambda", "psi_lo", "psi_hi", "status", "sipw_psi")


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, int) and not isinstance(v, bool):
        return str(v)
    v = float(v)
    return "" if v != v else repr(v)


@dataclass
class ReportLine:
    method: str
    basis: str
    delta: Optional[float]
    lam: Optional[float]
    result: object  # BoundResult
    feasible_count: Optional[int] = None
    boot_lower: Optional[float] = None
    boot_upper: Optional[float] = None

    def cells(self) -> list[str]:
        r = self.result
        return [fmt(x) for x in (
            self.method, self.basis, self.delta, self.lam,
            r.mu1_lo, r.mu1_hi, r.mu0_lo, r.mu0_hi,
            r.psi_lo, r.psi_hi, r.length, r.status,
            self.feasible_count, self.boot_lower, self.boot_upper,
        )]


def _write(path, header, rows: Iterable[list]) -> None:
    """Write a CSV to ``path``; ``"-"`` means standard output."""
    if str(path) == "-":
        _rows(sys.stdout, header, rows)
        return
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        _rows(fh, header, rows)


def _rows(fh, header, rows) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(row)


def write_report(lines: Iterable[ReportLine], path) -> None:
    _write(path, REPORT_COLUMNS, (ln.cells() for ln in lines))


def write_simulation(report, path) -> None:
    rows = []
    for r in report.rows:
        s = r.setting
        rows.append([fmt(x) for x in (
            r.scenario, s.method, s.basis, s.delta, s.lam,
            r.avg_lo, r.avg_hi, r.length, r.coverage, r.feasible_count, r.replicates, report.true_ate,
        )])
    _write(path, SIMULATION_COLUMNS, rows)


def write_replicate_dump(report, path) -> None:
    rows = []
    for r in report.records:
        s = r.setting
        rows.append([fmt(x) for x in (
            report.scenario, r.replicate, s.method, s.basis, s.delta, s.lam,
            r.psi_lo, r.psi_hi, r.status, r.sipw_psi,
        )])
    _write(path, REPLICATE_COLUMNS, rows)
