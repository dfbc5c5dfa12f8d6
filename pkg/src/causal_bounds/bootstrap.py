"""Nonparametric bootstrap of the bound endpoints with feasibility accounting."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Optional

import numpy as np

from .basis import expand, parse_terms
from .bounds import solve_bounds
from .data import Dataset, SensitivityConfig
from .errors import AllReplicatesInfeasible, CausalBoundsError
from .logistic import fit_mar_propensity
from .parallel import map_ordered, replicate_rng
from .quantile import qb_bounds
from .report import fmt

PROPOSED = "Proposed"
QB = "QB"
PERCENTILE_RULE = "linear interpolation between order statistics at position p*(N-1), N = feasible replicates"

CustomFn = Optional[Callable[[np.ndarray], Mapping[str, np.ndarray]]]


@dataclass(frozen=True)
class ReplicateRecord:
    index: int
    psi_lo: float
    psi_hi: float
    status: str


@dataclass
class BootstrapSummary:
    b_requested: int
    feasible_count: int
    boot_lower: float
    boot_upper: float
    replicate_records: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)


def percentile(values, p: float) -> float:
    """Linear interpolation between the closest order statistics (numpy's default rule)."""
    return float(np.quantile(np.asarray(values, dtype=float), p, method="linear"))


def analyse(
    d: Dataset,
    cfg: SensitivityConfig,
    method: str = PROPOSED,
    custom_fn: CustomFn = None,
    qb_seed: Optional[int] = None,
):
    """Run one full analysis (propensity fit when needed, basis expansion, LPs)."""
    if method == PROPOSED:
        ehat = fit_mar_propensity(d).ehat if cfg.lam is not None else None
        g = expand(parse_terms(list(cfg.basis_terms)), d, custom_fn(d.x) if custom_fn else None)
        return solve_bounds(d, g, cfg, ehat)
    if method == QB:
        if cfg.lam is None:
            raise ValueError("the quantile-balancing method needs lambda")
        ehat = fit_mar_propensity(d).ehat
        return qb_bounds(d, ehat, cfg.lam, seed=cfg.seed if qb_seed is None else qb_seed)
    raise ValueError(f"unknown method {method!r}")


def _replicate(args) -> ReplicateRecord:
    d, cfg, method, i, custom_fn = args
    rng = replicate_rng(cfg.seed, i)
    idx = rng.integers(0, d.n, size=d.n)
    try:
        res = analyse(d.take(idx), cfg, method, custom_fn, qb_seed=int(rng.integers(2**32)))
    except CausalBoundsError:
        # empty arm in the resample, separation in the refit, degenerate design ...
        return ReplicateRecord(i, float("nan"), float("nan"), "Infeasible")
    return ReplicateRecord(i, res.psi_lo, res.psi_hi, res.status)


def bootstrap_bounds(
    d: Dataset,
    cfg: SensitivityConfig,
    method: str = PROPOSED,
    custom_fn: CustomFn = None,
    workers: Optional[int] = None,
) -> BootstrapSummary:
    """Percentile intervals for the lower and upper ATE bounds.

    Replicate i resamples n units with replacement from a stream keyed by
    (cfg.seed, i) and reruns the whole analysis. Infeasible replicates,
    including those whose propensity refit fails, are kept in the records but
    excluded from the percentiles: boot_lower is the 2.5th percentile of the
    feasible lower bounds and boot_upper the 97.5th of the upper bounds.
    """
    if cfg.bootstrap_b < 1:
        raise ValueError("bootstrap_b must be >= 1")
    if method not in (PROPOSED, QB):
        raise ValueError(f"unknown method {method!r}")
    if method == QB and cfg.lam is None:
        raise ValueError("the quantile-balancing method needs lambda")
    jobs = [(d, cfg, method, i, custom_fn) for i in range(cfg.bootstrap_b)]
    records = map_ordered(_replicate, jobs, workers)
    ok = [r for r in records if r.status == "Optimal"]
    if not ok:
        exc = AllReplicatesInfeasible(f"none of {cfg.bootstrap_b} bootstrap replicates was feasible")
        exc.summary = BootstrapSummary(cfg.bootstrap_b, 0, float("nan"), float("nan"), records, {"method": method})
        raise exc
    lo = [r.psi_lo for r in ok]
    hi = [r.psi_hi for r in ok]
    return BootstrapSummary(
        cfg.bootstrap_b,
        len(ok),
        percentile(lo, 0.025),
        percentile(hi, 0.975),
        records,
        {"percentile_rule": PERCENTILE_RULE, "n_used": len(ok), "method": method},
    )


def write_replicates(summary: BootstrapSummary, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["replicate", "psi_lo", "psi_hi", "status"])
        for r in summary.replicate_records:
            w.writerow([r.index, fmt(r.psi_lo), fmt(r.psi_hi), r.status])

