"""Logistic propensity model fitted on observed covariates by Newton's method."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, log_expit

from .data import Dataset
from .errors import NoConvergence, RankDeficientDesign, SeparationDetected

SCORE_TOL = 1e-8
MAX_ITER = 100
ETA_LIMIT = 20.0  # |logit| beyond this means fitted e within ~2e-9 of 0 or 1
RIDGE = 1e-10
STEP_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class MarPropensity:
    theta: float
    alpha: np.ndarray
    ehat: np.ndarray
    iterations: int
    score_norm: float

    def predict(self, x_row) -> float:
        return predict(self, x_row)


def _loglik(eta: np.ndarray, z: np.ndarray) -> float:
    return float(np.sum(z * log_expit(eta) + (1 - z) * log_expit(-eta)))


def score(design: np.ndarray, z: np.ndarray, coef: np.ndarray) -> np.ndarray:
    """Score vector sum_i (1, x_i) (z_i - expit(theta + alpha'x_i))."""
    return design.T @ (z - expit(design @ coef))


def fit_mar_propensity(d: Dataset) -> MarPropensity:
    """Solve the logistic score equation for (theta, alpha).

    Starts from theta = logit(mean z), alpha = 0 and takes Newton steps with
    step-halving on the log-likelihood. Covariate columns that are identically
    zero carry no information and keep a zero slope.
    """
    z = d.z
    live = np.flatnonzero(np.any(d.x != 0.0, axis=0))
    design = np.column_stack([np.ones(d.n), d.x[:, live]])
    p = design.shape[1]
    if np.linalg.matrix_rank(design) < p:
        raise RankDeficientDesign(f"design (1, X) has rank < {p}")

    zbar = z.mean()
    coef = np.zeros(p)
    coef[0] = np.log(zbar / (1 - zbar))
    eta = design @ coef
    ll = _loglik(eta, z)
    it = 0
    while True:
        u = design.T @ (z - expit(eta))
        norm = float(np.abs(u).max())
        pr = expit(eta)
        h = (design * (pr * (1 - pr))[:, None]).T @ design
        h[np.diag_indices(p)] += RIDGE
        try:
            step = np.linalg.solve(h, u)
        except np.linalg.LinAlgError:
            raise RankDeficientDesign("singular Hessian") from None
        # a tiny score alone is not enough: under separation the score vanishes
        # while Newton keeps pushing the linear predictor outwards
        if norm <= SCORE_TOL and np.abs(design @ step).max() <= STEP_TOL:
            break
        if np.abs(eta).max() > ETA_LIMIT:
            raise SeparationDetected("linear predictor diverging; treatment is (quasi-)separated by covariates")
        if it >= MAX_ITER:
            raise NoConvergence(f"score norm {norm:.3g} after {MAX_ITER} Newton iterations")
        t = 1.0
        for _ in range(40):
            cand = coef + t * step
            eta_c = design @ cand
            ll_c = _loglik(eta_c, z)
            if ll_c >= ll - 1e-12 * abs(ll):
                break
            t *= 0.5
        coef, eta, ll = cand, eta_c, ll_c
        it += 1

    alpha = np.zeros(d.k)
    alpha[live] = coef[1:]
    ehat = expit(eta)
    if np.any(ehat <= 0.0) or np.any(ehat >= 1.0):
        raise SeparationDetected("fitted propensity reached 0 or 1")
    ehat.setflags(write=False)
    alpha.setflags(write=False)
    return MarPropensity(float(coef[0]), alpha, ehat, it, norm)


def predict(m: MarPropensity, x_row) -> float:
    x_row = np.asarray(x_row, dtype=float).reshape(-1)
    if x_row.shape[0] != m.alpha.shape[0]:
        raise ValueError(f"expected {m.alpha.shape[0]} covariates, got {x_row.shape[0]}")
    return float(expit(m.theta + m.alpha @ x_row))
