"""Independent reference computations used by the test-suite."""
from itertools import combinations, product

import numpy as np


def enumerate_lp(c, lower, upper, a, b, sense="min", tol=1e-9):
    """Best objective over all basic solutions, or None when infeasible.

    Every choice of basic columns (as many as the rank of ``a``) and every
    assignment of the remaining variables to a box bound is tried; the
    square (or least-squares) system gives the basic values.
    """
    c, lower, upper = map(np.asarray, (c, lower, upper))
    a = np.asarray(a, dtype=float).reshape(-1, c.shape[0])
    b = np.asarray(b, dtype=float)
    m = c.shape[0]
    k = np.linalg.matrix_rank(a) if a.shape[0] else 0
    best = None
    for cols in combinations(range(m), k):
        cols = list(cols)
        if k and np.linalg.matrix_rank(a[:, cols]) < k:
            continue
        rest = [j for j in range(m) if j not in cols]
        for choice in product((0, 1), repeat=len(rest)):
            x = np.zeros(m)
            for j, ch in zip(rest, choice):
                x[j] = upper[j] if ch else lower[j]
            if k:
                rhs = b - a[:, rest] @ x[rest]
                sol = np.linalg.lstsq(a[:, cols], rhs, rcond=None)[0]
                x[cols] = sol
            if a.shape[0] and np.abs(a @ x - b).max() > tol:
                continue
            if np.any(x < lower - tol) or np.any(x > upper + tol):
                continue
            v = float(c @ x)
            if best is None or (v < best if sense == "min" else v > best):
                best = v
    return best


def pinball_grid(y, tau, lo, hi, step=1e-4):
    """Intercept-only quantile fit by grid search over [lo, hi]."""
    grid = np.arange(lo, hi + step / 2, step)
    r = np.asarray(y)[None, :] - grid[:, None]
    loss = np.where(r >= 0, tau * r, (tau - 1) * r).sum(axis=1)
    return grid[int(np.argmin(loss))], float(loss.min())


def interpolated_percentile(values, p):
    """Linear interpolation between closest order statistics, by hand."""
    v = sorted(values)
    pos = (len(v) - 1) * p
    lo = int(np.floor(pos))
    hi = min(lo + 1, len(v) - 1)
    return v[lo] + (pos - lo) * (v[hi] - v[lo])


def random_lp(rng, max_m=8, max_r=3):
    """Random box/equality LP; about one in five is pushed towards infeasibility."""
    m = int(rng.integers(1, max_m + 1))
    r = int(rng.integers(0, min(max_r, m) + 1))
    lower = np.round(rng.uniform(-3, 1, m), 2)
    upper = lower + np.round(rng.uniform(0, 4, m), 2)
    a = np.round(rng.uniform(-2, 2, (r, m)), 1)
    if r and rng.random() < 0.2:
        a[-1] = a[0] * 2  # dependent row
    w0 = rng.uniform(lower, upper)
    b = a @ w0
    if r and rng.random() < 0.2:
        b = b + rng.normal(0, 5, r)
    c = np.round(rng.uniform(-3, 3, m), 1)
    sense = "max" if rng.random() < 0.5 else "min"
    return c, lower, upper, a, b, sense
