"""IPW and stabilized IPW point estimators for a given propensity vector."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset


@dataclass(frozen=True)
class AteEstimate:
    mu1: float
    mu0: float
    psi: float
    form: str  # "IPW" or "SIPW"


def _check(d: Dataset, e) -> np.ndarray:
    e = np.asarray(e, dtype=float).reshape(-1)
    if e.shape[0] != d.n:
        raise ValueError(f"propensity vector has length {e.shape[0]}, expected {d.n}")
    if np.any(e <= 0.0) or np.any(e >= 1.0):
        raise ValueError("propensities must lie strictly inside (0, 1)")
    return e


def ipw(d: Dataset, e) -> AteEstimate:
    e = _check(d, e)
    z, y = d.z, d.y
    mu1 = float(np.sum(z * y / e) / d.n)
    mu0 = float(np.sum((1 - z) * y / (1 - e)) / d.n)
    return AteEstimate(mu1, mu0, mu1 - mu0, "IPW")


def sipw(d: Dataset, e) -> AteEstimate:
    """Ratio form: inverse weights normalized to sum to one within each arm."""
    e = _check(d, e)
    z, y = d.z, d.y
    w1 = z / e
    w0 = (1 - z) / (1 - e)
    mu1 = float(np.sum(w1 * y) / np.sum(w1))
    mu0 = float(np.sum(w0 * y) / np.sum(w0))
    return AteEstimate(mu1, mu0, mu1 - mu0, "SIPW")


def weighted_mean(y, w) -> float:
    """sum(w*y)/sum(w): the SIPW arm mean written in terms of inverse weights."""
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    return float(np.sum(w * y) / np.sum(w))
