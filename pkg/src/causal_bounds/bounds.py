"""Worst-case ATE bounds over inverse-propensity weights.

For the treated arm the decision variables are w_i = 1 / e(X_i, U_i), one per
treated unit. They are boxed by positivity, ``1/(1-delta) <= w_i <= 1/delta``,
optionally tightened by an odds-ratio envelope around a fitted propensity, and
must satisfy the balancing rows

    sum_{treated} g(X_i) w_i = sum_{all} g(X_i).

The arm mean is bounded by minimizing and maximizing (1/n) sum y_i w_i. The
control arm is the mirror image with w_i = 1 / (1 - e(X_i, U_i)).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .basis import BasisMatrix
from .data import Dataset, SensitivityConfig, split_arms
from .linprog import LinearProgram, LpSolution, Sense, Status, solve

TREATED = "treated"
CONTROL = "control"


@dataclass(frozen=True, eq=False)
class WeightPolytope:
    arm: str
    indices: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    a: np.ndarray
    b: np.ndarray

    @property
    def empty_box(self) -> bool:
        return bool(np.any(self.lower > self.upper))


@dataclass(frozen=True)
class ArmInterval:
    lo: float
    hi: float
    status_lo: Status
    status_hi: Status
    iterations: tuple = (0, 0)
    residuals: tuple = (float("nan"), float("nan"))

    @property
    def feasible(self) -> bool:
        return self.status_lo is Status.OPTIMAL and self.status_hi is Status.OPTIMAL


@dataclass(frozen=True)
class BoundResult:
    mu1_lo: float
    mu1_hi: float
    mu0_lo: float
    mu0_hi: float
    psi_lo: float
    psi_hi: float
    statuses: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return all(s is Status.OPTIMAL for s in self.statuses.values())

    @property
    def status(self) -> str:
        return "Optimal" if self.feasible else "Infeasible"

    @property
    def length(self) -> float:
        return self.psi_hi - self.psi_lo


def or_envelope(ehat, lam: float, arm: str) -> tuple[np.ndarray, np.ndarray]:
    """Per-unit weight interval implied by an odds-ratio bound ``lam`` around ``ehat``.

    Treated weights are 1/e with odds(e) within a factor ``lam`` of odds(ehat);
    control weights are 1/(1-e) under the same odds-ratio restriction.
    """
    if lam < 1.0:
        raise ValueError(f"lambda must be >= 1, got {lam}")
    e = np.asarray(ehat, dtype=float)
    if np.any(e <= 0) or np.any(e >= 1):
        raise ValueError("fitted propensities must lie in (0, 1)")
    if arm == TREATED:
        lo = (1 + (lam - 1) * e) / (lam * e)
        hi = (1 + e * (1 / lam - 1)) / (e / lam)
    elif arm == CONTROL:
        lo = e / (lam * (1 - e)) + 1
        hi = lam * e / (1 - e) + 1
    else:
        raise ValueError(f"unknown arm {arm!r}")
    return lo, hi


def build_polytope(
    d: Dataset,
    g: BasisMatrix,
    delta: float,
    arm: str,
    envelope: Optional[tuple] = None,
) -> WeightPolytope:
    """Weight polytope for one arm; ``envelope`` is a (lower, upper) pair of length-n arrays."""
    if not (0.0 < delta < 0.5):
        raise ValueError(f"delta must lie in (0, 0.5), got {delta}")
    gm = np.asarray(g.g if isinstance(g, BasisMatrix) else g, dtype=float)
    if gm.shape[0] != d.n:
        raise ValueError("basis rows do not align with the dataset")
    if arm not in (TREATED, CONTROL):
        raise ValueError(f"unknown arm {arm!r}")
    treated, control = split_arms(d)
    idx = treated if arm == TREATED else control
    m = idx.shape[0]
    lower = np.full(m, 1.0 / (1.0 - delta))
    upper = np.full(m, 1.0 / delta)
    if envelope is not None:
        elo, ehi = (np.asarray(v, dtype=float)[idx] for v in envelope)
        lower = np.maximum(lower, elo)
        upper = np.minimum(upper, ehi)
    return WeightPolytope(arm, idx, lower, upper, gm[idx].T.copy(), gm.sum(axis=0))


def solve_side(poly: WeightPolytope, y: np.ndarray, norm: float, sense: Sense) -> LpSolution:
    """Optimize sum(y_i w_i)/norm over ``poly`` in one direction."""
    if poly.empty_box:
        return LpSolution(Status.INFEASIBLE)
    c = np.asarray(y, dtype=float)[poly.indices] / norm
    return solve(LinearProgram(c, poly.lower, poly.upper, poly.a, poly.b, sense))


def interval_from(lo_s: LpSolution, hi_s: Optional[LpSolution]) -> ArmInterval:
    if hi_s is None:
        return ArmInterval(np.nan, np.nan, lo_s.status, lo_s.status, (lo_s.iterations, 0))
    feasible = lo_s.optimal and hi_s.optimal
    return ArmInterval(
        lo_s.objective if feasible else np.nan,
        hi_s.objective if feasible else np.nan,
        lo_s.status,
        hi_s.status,
        (lo_s.iterations, hi_s.iterations),
        (lo_s.max_residual, hi_s.max_residual),
    )


def solve_polytope(poly: WeightPolytope, y: np.ndarray, norm: float) -> ArmInterval:
    """Min and max of sum(y_i w_i)/norm over ``poly``.

    The max side is skipped when the min side already proved infeasibility.
    """
    lo_s = solve_side(poly, y, norm, Sense.MIN)
    if not lo_s.optimal:
        return interval_from(lo_s, None)
    return interval_from(lo_s, solve_side(poly, y, norm, Sense.MAX))


def assemble(mu1: ArmInterval, mu0: ArmInterval, extra: Optional[dict] = None) -> BoundResult:
    """Combine arm intervals; psi is left NaN unless both arms are feasible."""
    if mu1.feasible and mu0.feasible:
        psi_lo = mu1.lo - mu0.hi
        psi_hi = mu1.hi - mu0.lo
    else:
        psi_lo = psi_hi = np.nan
    statuses = {
        "mu1_lo": mu1.status_lo,
        "mu1_hi": mu1.status_hi,
        "mu0_lo": mu0.status_lo,
        "mu0_hi": mu0.status_hi,
    }
    diag = {
        "iterations": {"mu1": mu1.iterations, "mu0": mu0.iterations},
        "residuals": {"mu1": mu1.residuals, "mu0": mu0.residuals},
    }
    if extra:
        diag.update(extra)
    return BoundResult(mu1.lo, mu1.hi, mu0.lo, mu0.hi, psi_lo, psi_hi, statuses, diag)


def solve_bounds(
    d: Dataset,
    g: BasisMatrix,
    cfg: SensitivityConfig,
    ehat: Optional[np.ndarray] = None,
) -> BoundResult:
    """Solve the four LPs (min/max per arm) and assemble the ATE interval.

    When ``cfg.lam`` is set, ``ehat`` (fitted propensities for all n units) is
    required and each arm's box is intersected with the odds-ratio envelope.
    An infeasible arm is reported through the statuses rather than raised.
    """
    env1 = env0 = None
    if cfg.lam is not None:
        if ehat is None:
            raise ValueError("an odds-ratio envelope needs fitted propensities")
        env1 = or_envelope(ehat, cfg.lam, TREATED)
        env0 = or_envelope(ehat, cfg.lam, CONTROL)
    p1 = build_polytope(d, g, cfg.delta, TREATED, env1)
    p0 = build_polytope(d, g, cfg.delta, CONTROL, env0)
    mu1 = solve_polytope(p1, d.y, d.n)
    mu0 = solve_polytope(p0, d.y, d.n)
    return assemble(mu1, mu0)
