"""Quantile-balancing baseline: linear quantile regression, cross-fitting and
odds-ratio constrained bounds with quantile balance rows.

Quantile regression is solved through the dual of the pinball-loss LP::

    max  y @ b   s.t.  X.T @ b = (1 - tau) X.T @ 1,   0 <= b <= 1

which has one bounded variable per observation and one row per coefficient,
so it fits the bounded simplex directly. The coefficients are the optimal
row duals.

When the minimizer is not unique (e.g. an intercept-only fit with n*tau an
integer) the lower end is returned, matching Q_t = inf{q : F(q) >= t}. This is
done by solving at tau - TIE_SHIFT, whose optimal vertex is also optimal at tau.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bounds import (
    CONTROL,
    TREATED,
    BoundResult,
    WeightPolytope,
    assemble,
    interval_from,
    or_envelope,
    solve_side,
)
from .data import Dataset, split_arms
from .errors import RankDeficientDesign, TooFewUnits
from .linprog import LinearProgram, Sense, solve

TIE_SHIFT = 1e-9


@dataclass(frozen=True, eq=False)
class QuantileFit:
    tau: float
    beta: np.ndarray
    pinball_loss: float

    def predict(self, xs: np.ndarray) -> np.ndarray:
        return np.asarray(xs, dtype=float) @ self.beta


@dataclass(frozen=True)
class QbBoundResult(BoundResult):
    tau_used: dict = field(default_factory=dict)


def pinball_loss(resid: np.ndarray, tau: float) -> float:
    resid = np.asarray(resid, dtype=float)
    return float(np.sum(np.where(resid >= 0, tau * resid, (tau - 1) * resid)))


def fit_quantile_regression(ys, xs, tau: float) -> QuantileFit:
    """Linear tau-quantile regression of ``ys`` on the design ``xs`` (include an intercept column yourself)."""
    if not (0.0 < tau < 1.0):
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    y = np.asarray(ys, dtype=float).reshape(-1)
    x = np.asarray(xs, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    n, p = x.shape
    if n != y.shape[0]:
        raise ValueError("ys and xs disagree on the number of rows")
    if np.linalg.matrix_rank(x) < p:
        raise RankDeficientDesign(f"quantile design has rank < {p}")
    t = max(tau - TIE_SHIFT, 0.5 * tau)
    lp = LinearProgram(y, np.zeros(n), np.ones(n), x.T, (1 - t) * x.sum(axis=0), Sense.MAX)
    sol = solve(lp)
    if not sol.optimal:
        # the dual is always feasible (b = 1 - tau); anything else is numerical
        raise RankDeficientDesign(f"quantile LP ended with status {sol.status.value}")
    beta = sol.duals.copy()
    return QuantileFit(tau, beta, pinball_loss(y - x @ beta, tau))


def fold_assignment(n_units: int, folds: int, seed: int) -> np.ndarray:
    """Fold label per position; a seeded shuffle dealt round-robin so sizes differ by at most one."""
    perm = np.random.default_rng(seed).permutation(n_units)
    labels = np.empty(n_units, dtype=int)
    labels[perm] = np.arange(n_units) % folds
    return labels


def crossfit_quantiles(d: Dataset, tau: float, folds: int = 5, seed: int = 0, arm: str = TREATED) -> np.ndarray:
    """Out-of-fold tau-quantile predictions for the units of ``arm``.

    Returns a length-n vector; entries outside the arm are NaN. Fold k is
    predicted from a linear quantile regression of Y on (1, X) fitted to the
    arm's units outside fold k.
    """
    if folds < 2:
        raise ValueError("need at least two folds")
    treated, control = split_arms(d)
    idx = treated if arm == TREATED else control
    if idx.shape[0] < folds:
        raise TooFewUnits(f"{arm} arm has {idx.shape[0]} units, fewer than {folds} folds")
    labels = fold_assignment(idx.shape[0], folds, seed)
    design = np.column_stack([np.ones(d.n), d.x])
    out = np.full(d.n, np.nan)
    for k in range(folds):
        train = idx[labels != k]
        test = idx[labels == k]
        fit = fit_quantile_regression(d.y[train], design[train], tau)
        out[test] = design[test] @ fit.beta
    return out


def qb_taus(lam: float) -> tuple[float, float]:
    """(tau for the lower side, tau for the upper side)."""
    return 1.0 / (1.0 + lam), lam / (1.0 + lam)


def qb_polytopes(
    d: Dataset,
    ehat,
    lam: float,
    seed: int = 0,
    folds: int = 5,
    delta: Optional[float] = None,
) -> dict:
    """The four quantile-balancing programs, keyed like BoundResult statuses.

    Each value is ``(polytope, norm, tau)``; the arm mean is ``sum(y w)/norm``
    with ``norm`` the fitted-weight total, which the intercept balance row
    holds fixed.
    """
    if lam < 1.0:
        raise ValueError(f"lambda must be >= 1, got {lam}")
    e = np.asarray(ehat, dtype=float)
    treated, control = split_arms(d)
    tau_lo, tau_hi = qb_taus(lam)
    out = {}
    for arm, idx, what in ((TREATED, treated, "mu1"), (CONTROL, control, "mu0")):
        w_fit = 1.0 / e[idx] if arm == TREATED else 1.0 / (1.0 - e[idx])
        elo, ehi = or_envelope(e, lam, arm)
        lower, upper = elo[idx], ehi[idx]
        if delta is not None:
            lower = np.maximum(lower, 1.0 / (1.0 - delta))
            upper = np.minimum(upper, 1.0 / delta)
        quantiles = {}
        for tau in sorted({tau_lo, tau_hi}):
            quantiles[tau] = crossfit_quantiles(d, tau, folds, seed, arm)[idx]
        for side, tau in (("lo", tau_lo), ("hi", tau_hi)):
            a = np.vstack([np.ones(idx.shape[0]), quantiles[tau]])
            poly = WeightPolytope(arm, idx, lower, upper, a, a @ w_fit)
            out[f"{what}_{side}"] = (poly, float(w_fit.sum()), tau)
    return out


def qb_bounds(
    d: Dataset,
    ehat,
    lam: float,
    seed: int = 0,
    folds: int = 5,
    delta: Optional[float] = None,
) -> QbBoundResult:
    """Quantile-balancing bounds for mu1, mu0 and the ATE at odds-ratio ``lam``.

    The upper side of each arm balances the lam/(1+lam) quantile and the lower
    side the 1/(1+lam) quantile. ``delta`` optionally intersects the
    odds-ratio box with the positivity box.
    """
    progs = qb_polytopes(d, ehat, lam, seed, folds, delta)
    arms = {}
    for what in ("mu1", "mu0"):
        lo_poly, lo_norm, _ = progs[f"{what}_lo"]
        hi_poly, hi_norm, _ = progs[f"{what}_hi"]
        lo_s = solve_side(lo_poly, d.y, lo_norm, Sense.MIN)
        hi_s = solve_side(hi_poly, d.y, hi_norm, Sense.MAX)
        arms[what] = interval_from(lo_s, hi_s)
    base = assemble(arms["mu1"], arms["mu0"])
    taus = {k: v[2] for k, v in progs.items()}
    return QbBoundResult(**base.__dict__, tau_used=taus)
