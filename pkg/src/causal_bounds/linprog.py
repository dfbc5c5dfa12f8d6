"""Two-phase bounded-variable primal simplex for box-constrained equality LPs.

Problems have the form::

    min (or max)  c @ w
    subject to    a @ w == b
                  lower <= w <= upper      (all bounds finite)

Nonbasic variables rest at one of their bounds, so the box never becomes
constraint rows and the basis stays r x r where r is the number of equality
rows. The basis inverse is kept explicitly (r is small for every program in
this package) with a rank-one update per pivot and periodic refactorization.

Pricing is Dantzig's rule with ties broken by the smallest index. After a run
of degenerate pivots the solver switches to Bland's rule (smallest eligible
index for both the entering and the leaving variable) until progress resumes,
which rules out cycling. Every choice is a pure function of the input, so
repeated solves are bit-identical.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, TextIO, Union

import numpy as np

from .errors import InconsistentRows, NumericalBreakdown

FEAS_TOL = 1e-8
COST_TOL = 1e-9
PIVOT_TOL = 1e-12
ELIM_TOL = 1e-10
BOUND_TOL = 1e-9

_REFACTOR_EVERY = 64
_DEGENERATE_RUN = 40

AT_LOWER, AT_UPPER, BASIC = 0, 1, 2


class Sense(str, Enum):
    MIN = "min"
    MAX = "max"


class Status(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass(frozen=True, eq=False)
class LinearProgram:
    c: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    a: np.ndarray
    b: np.ndarray
    sense: Sense = Sense.MIN

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).reshape(-1)
        m = c.shape[0]
        lo = np.broadcast_to(np.asarray(self.lower, dtype=float), (m,)).copy()
        up = np.broadcast_to(np.asarray(self.upper, dtype=float), (m,)).copy()
        a = np.asarray(self.a, dtype=float)
        if a.size == 0:
            a = np.zeros((0, m))
        a = a.reshape(-1, m)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if b.shape[0] != a.shape[0]:
            raise ValueError(f"a has {a.shape[0]} rows but b has {b.shape[0]} entries")
        for name, arr in (("c", c), ("lower", lo), ("upper", up), ("a", a), ("b", b)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite entry in {name}")
        if np.any(lo > up):
            raise ValueError("lower bound exceeds upper bound")
        for name, arr in (("c", c), ("lower", lo), ("upper", up), ("a", a), ("b", b)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "sense", Sense(self.sense))

    @property
    def m(self) -> int:
        return self.c.shape[0]

    @property
    def r(self) -> int:
        return self.a.shape[0]


@dataclass(eq=False)
class LpSolution:
    """Solver outcome.

    ``w``, ``duals`` and ``reduced_costs`` are set only when Optimal; the
    reduced costs are ``c - duals @ a`` in the caller's sense. ``max_residual``
    is measured on the row-equilibrated system (each row scaled to unit
    max-abs), so it is comparable across problems of any magnitude.
    """

    status: Status
    w: Optional[np.ndarray] = None
    objective: float = float("nan")
    iterations: int = 0
    max_residual: float = float("nan")
    phase1_objective: float = float("nan")
    duals: Optional[np.ndarray] = None
    reduced_costs: Optional[np.ndarray] = None
    var_status: Optional[np.ndarray] = None
    kept_rows: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def _row_scales(a: np.ndarray) -> np.ndarray:
    s = np.abs(a).max(axis=1) if a.shape[1] else np.zeros(a.shape[0])
    return np.where(s > 0, s, 1.0)


def independent_rows(a: np.ndarray, b: np.ndarray, tol: float = ELIM_TOL, rhs_tol: float = FEAS_TOL) -> np.ndarray:
    """Indices of a maximal independent subset of the rows of ``[a | b]``.

    Gaussian elimination with partial pivoting on the row-equilibrated system.
    Raises InconsistentRows when a dependent row disagrees on its right-hand
    side by more than ``rhs_tol``.
    """
    r, m = a.shape
    if r == 0:
        return np.arange(0)
    s = _row_scales(a)
    work = np.hstack([a / s[:, None], (b / s)[:, None]])
    free = list(range(r))
    pivots = []
    for j in range(m):
        if not free:
            break
        col = np.abs(work[free, j])
        k = int(np.argmax(col))
        if col[k] <= tol:
            continue
        p = free.pop(k)
        pivots.append(p)
        if free:
            f = work[free, j] / work[p, j]
            work[free] -= f[:, None] * work[p]
    for i in free:
        if abs(work[i, m]) > rhs_tol:
            raise InconsistentRows(f"row {i} is a combination of other rows with a different right-hand side")
    return np.array(sorted(pivots), dtype=int)


def preprocess(p: LinearProgram) -> LinearProgram:
    """Drop linearly dependent equality rows (raises InconsistentRows)."""
    keep = independent_rows(p.a, p.b)
    if keep.shape[0] == p.r:
        return p
    return LinearProgram(p.c, p.lower, p.upper, p.a[keep], p.b[keep], p.sense)


class _Simplex:
    def __init__(self, a, b, lo, up, cost2):
        r, m = a.shape
        self.r, self.m = r, m
        self.b = b
        self.cost2 = cost2
        # nonbasic start: the bound that is better for the phase-2 objective
        x = np.where(cost2 < 0, up, lo).astype(float)
        resid = b - a @ x
        sign = np.where(resid >= 0, 1.0, -1.0)
        self.A = np.hstack([a, np.diag(sign)])
        self.lo = np.concatenate([lo, np.zeros(r)])
        self.up = np.concatenate([up, np.full(r, np.inf)])
        self.x = np.concatenate([x, np.abs(resid)])
        self.status = np.concatenate([np.where(cost2 < 0, AT_UPPER, AT_LOWER), np.full(r, BASIC)]).astype(np.int8)
        self.basis = np.arange(m, m + r)
        self.binv = np.diag(sign)
        self.iterations = 0
        self.pivots_since_refactor = 0
        self.max_iter = 50 * (m + r) + 1000

    def refactor(self):
        bmat = self.A[:, self.basis]
        try:
            self.binv = np.linalg.inv(bmat)
        except np.linalg.LinAlgError:
            raise NumericalBreakdown("basis matrix became singular") from None
        nonbasic = self.status != BASIC
        rhs = self.b - self.A[:, nonbasic] @ self.x[nonbasic]
        self.x[self.basis] = self.binv @ rhs
        self.pivots_since_refactor = 0

    def run(self, cost: np.ndarray, allowed: np.ndarray) -> Status:
        """Minimize ``cost`` from the current basic feasible point."""
        degenerate = 0
        while True:
            if self.iterations >= self.max_iter:
                raise NumericalBreakdown(f"iteration limit {self.max_iter} reached")
            y = cost[self.basis] @ self.binv
            d = cost - y @ self.A
            st = self.status
            movable = allowed & (self.up > self.lo)
            elig = movable & (((st == AT_LOWER) & (d < -COST_TOL)) | ((st == AT_UPPER) & (d > COST_TOL)))
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                return Status.OPTIMAL
            bland = degenerate >= _DEGENERATE_RUN
            if bland:
                q = int(cand[0])
            else:
                q = int(cand[np.argmax(np.abs(d[cand]))])
            s = 1.0 if st[q] == AT_LOWER else -1.0
            alpha = self.binv @ self.A[:, q]
            sa = s * alpha
            xb = self.x[self.basis]
            lob = self.lo[self.basis]
            upb = self.up[self.basis]
            limits = np.full(self.r, np.inf)
            dec = sa > PIVOT_TOL
            inc = sa < -PIVOT_TOL
            limits[dec] = (xb[dec] - lob[dec]) / sa[dec]
            with np.errstate(invalid="ignore"):
                limits[inc] = (upb[inc] - xb[inc]) / -sa[inc]
            np.maximum(limits, 0.0, out=limits)
            t_flip = self.up[q] - self.lo[q]
            t_basic = limits.min() if self.r else np.inf
            self.iterations += 1
            if t_flip <= t_basic:
                if not np.isfinite(t_flip):
                    return Status.UNBOUNDED
                self.x[self.basis] -= t_flip * sa
                if st[q] == AT_LOWER:
                    st[q], self.x[q] = AT_UPPER, self.up[q]
                else:
                    st[q], self.x[q] = AT_LOWER, self.lo[q]
                degenerate = 0
                continue
            if not np.isfinite(t_basic):
                return Status.UNBOUNDED
            ties = np.flatnonzero(limits <= t_basic + 1e-12 * max(1.0, t_basic))
            if bland:
                p = int(ties[np.argmin(self.basis[ties])])
            else:
                mag = np.abs(alpha[ties])
                p = int(ties[np.argmax(mag)])
            if abs(alpha[p]) < PIVOT_TOL:
                raise NumericalBreakdown(f"pivot magnitude {abs(alpha[p]):.3g} below {PIVOT_TOL:g}")
            t = limits[p]
            degenerate = degenerate + 1 if t <= 1e-12 else 0
            self.x[self.basis] -= t * sa
            self.x[q] += s * t
            leave = self.basis[p]
            if sa[p] > 0:
                st[leave], self.x[leave] = AT_LOWER, self.lo[leave]
            else:
                st[leave], self.x[leave] = AT_UPPER, self.up[leave]
            self._pivot(p, q, alpha)

    def _pivot(self, p: int, q: int, alpha: np.ndarray):
        self.basis[p] = q
        self.status[q] = BASIC
        piv = alpha[p]
        row = self.binv[p] / piv
        self.binv -= np.outer(alpha, row)
        self.binv[p] = row
        self.pivots_since_refactor += 1
        if self.pivots_since_refactor >= _REFACTOR_EVERY:
            self.refactor()

    def evict_artificials(self):
        """Pivot zero-level artificials out of the basis where a structural column allows."""
        for p in range(self.r):
            v = self.basis[p]
            if v < self.m:
                continue
            row = self.binv[p] @ self.A[:, : self.m]
            row[self.status[: self.m] == BASIC] = 0.0
            j = int(np.argmax(np.abs(row))) if self.m else 0
            if self.m == 0 or abs(row[j]) <= 1e-9:
                continue
            alpha = self.binv @ self.A[:, j]
            self.status[v] = AT_LOWER
            self.x[v] = 0.0
            self._pivot(p, j, alpha)
        self.refactor()


def solve(p: LinearProgram, equilibrate: bool = True) -> LpSolution:
    """Solve ``p``; infeasibility and unboundedness are reported via ``status``."""
    try:
        keep = independent_rows(p.a, p.b)
    except InconsistentRows:
        return LpSolution(Status.INFEASIBLE)
    a, b = p.a[keep], p.b[keep]
    scale = _row_scales(a) if equilibrate else np.ones(a.shape[0])
    a = a / scale[:, None]
    b = b / scale
    sign = -1.0 if p.sense is Sense.MAX else 1.0
    c = sign * p.c
    m, r = p.m, a.shape[0]

    sx = _Simplex(a, b, p.lower.copy(), p.upper.copy(), c)
    cost1 = np.concatenate([np.zeros(m), np.ones(r)])
    allowed = np.ones(m + r, dtype=bool)
    st = sx.run(cost1, allowed)
    if st is not Status.OPTIMAL:
        raise NumericalBreakdown("phase 1 reported an unbounded ray")
    sx.refactor()
    phase1 = float(sx.x[m:].sum())
    if phase1 > FEAS_TOL:
        return LpSolution(Status.INFEASIBLE, iterations=sx.iterations, phase1_objective=phase1)

    sx.up[m:] = 0.0
    sx.x[m:][sx.status[m:] != BASIC] = 0.0
    sx.evict_artificials()
    allowed[m:] = False
    cost2 = np.concatenate([c, np.zeros(r)])
    st = sx.run(cost2, allowed)
    if st is Status.UNBOUNDED:
        return LpSolution(Status.UNBOUNDED, iterations=sx.iterations, phase1_objective=phase1)
    sx.refactor()

    w = np.clip(sx.x[:m], p.lower, p.upper)
    resid = float(np.abs(a @ w - b).max()) if r else 0.0
    y_scaled = cost2[sx.basis] @ sx.binv
    duals = np.zeros(p.r)
    duals[keep] = sign * y_scaled / scale
    reduced = p.c - duals @ p.a
    return LpSolution(
        Status.OPTIMAL,
        w=w,
        objective=float(p.c @ w),
        iterations=sx.iterations,
        max_residual=resid,
        phase1_objective=phase1,
        duals=duals,
        reduced_costs=reduced,
        var_status=sx.status[:m].copy(),
        kept_rows=keep,
    )


def dump_lp(p: LinearProgram, out: Union[str, Path, TextIO]) -> None:
    """Write ``p`` in a plain fixed text format (see :func:`read_lp`)."""
    buf = io.StringIO()
    fmt = lambda v: " ".join(f"{x:.17g}" for x in v)  # noqa: E731
    buf.write(f"LP {p.sense.value} m={p.m} r={p.r}\n")
    buf.write(f"c {fmt(p.c)}\n")
    buf.write(f"lower {fmt(p.lower)}\n")
    buf.write(f"upper {fmt(p.upper)}\n")
    for i in range(p.r):
        buf.write(f"row {fmt(p.a[i])} = {p.b[i]:.17g}\n")
    text = buf.getvalue()
    if isinstance(out, (str, Path)):
        Path(out).write_text(text, encoding="utf-8")
    else:
        out.write(text)


def read_lp(src: Union[str, Path, TextIO]) -> LinearProgram:
    text = Path(src).read_text(encoding="utf-8") if isinstance(src, (str, Path)) else src.read()
    lines = text.splitlines()
    head = lines[0].split()
    if head[0] != "LP":
        raise ValueError("not an LP dump")
    sense = Sense(head[1])
    m = int(head[2].split("=")[1])
    vec = lambda line, tag: np.array([float(t) for t in line.split()[1:]]) if line.startswith(tag) else None  # noqa: E731
    c, lo, up = vec(lines[1], "c "), vec(lines[2], "lower"), vec(lines[3], "upper")
    rows, rhs = [], []
    for line in lines[4:]:
        lhs, b = line[len("row "):].split(" = ")
        rows.append([float(t) for t in lhs.split()] if lhs.strip() else [])
        rhs.append(float(b))
    a = np.array(rows).reshape(-1, m) if rows else np.zeros((0, m))
    return LinearProgram(c, lo, up, a, np.array(rhs), sense)
