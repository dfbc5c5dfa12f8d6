import io

import numpy as np
import pytest
from scipy.optimize import linprog as scipy_linprog

from causal_bounds.errors import InconsistentRows
from causal_bounds.linprog import (
    BASIC,
    COST_TOL,
    LinearProgram,
    Sense,
    Status,
    dump_lp,
    independent_rows,
    preprocess,
    read_lp,
    solve,
)

from oracles import enumerate_lp, random_lp


def lp(c, lo, up, a, b, sense="min"):
    return LinearProgram(np.asarray(c, float), lo, up, np.asarray(a, float), np.asarray(b, float), Sense(sense))


def test_min_first_coordinate():
    s = solve(lp([1, 0], 0, 2, [[1, 1]], [2]))
    assert s.status is Status.OPTIMAL
    assert s.objective == pytest.approx(0, abs=1e-12)
    np.testing.assert_allclose(s.w, [0, 2], atol=1e-12)


def test_sum_out_of_reach():
    assert solve(lp([1, -1], 0, 2, [[1, 1]], [5])).status is Status.INFEASIBLE


def test_fractional_knapsack():
    s = solve(lp([2, 0], 4 / 3, 4, [[1, 1]], [4], "max"))
    assert s.objective == pytest.approx(16 / 3, abs=1e-12)
    np.testing.assert_allclose(s.w, [8 / 3, 4 / 3], atol=1e-12)


def test_preprocess_duplicate_row():
    p = preprocess(lp([1, 1], 0, 3, [[1, 1], [2, 2]], [2, 4]))
    assert p.r == 1


def test_preprocess_inconsistent():
    with pytest.raises(InconsistentRows):
        preprocess(lp([1, 1], 0, 3, [[1, 1], [2, 2]], [2, 5]))


def test_preprocess_no_rows():
    p = lp([1, 2], 0, 1, np.zeros((0, 2)), [])
    q = preprocess(p)
    assert q.r == 0
    np.testing.assert_array_equal(q.c, p.c)


def test_inconsistent_rows_solve_reports_infeasible():
    assert solve(lp([1, 1], 0, 3, [[1, 1], [2, 2]], [2, 5])).status is Status.INFEASIBLE


def test_independent_rows_keeps_first():
    keep = independent_rows(np.array([[1.0, 0], [2, 0], [0, 1]]), np.array([1.0, 2, 3]))
    assert keep.tolist() == [0, 2]


def test_no_rows_sits_on_bounds():
    s = solve(lp([1, -2, 0], [0, 0, 0], [1, 1, 1], np.zeros((0, 3)), []))
    assert s.objective == pytest.approx(-2)


@pytest.mark.parametrize("seed", range(3))
def test_random_against_enumeration(seed):
    rng = np.random.default_rng(100 + seed)
    for _ in range(60):
        c, lo, up, a, b, sense = random_lp(rng)
        s = solve(lp(c, lo, up, a, b, sense))
        best = enumerate_lp(c, lo, up, a, b, sense)
        if best is None:
            assert s.status is Status.INFEASIBLE
        else:
            assert s.status is Status.OPTIMAL
            assert s.objective == pytest.approx(best, abs=1e-9)


def test_random_against_highs():
    rng = np.random.default_rng(7)
    for _ in range(200):
        m = int(rng.integers(5, 40))
        r = int(rng.integers(1, 6))
        lo = rng.uniform(0.5, 1.5, m)
        up = lo + rng.uniform(0.1, 20, m)
        a = rng.standard_normal((r, m))
        b = a @ rng.uniform(lo, up) + (rng.normal(0, 3, r) if rng.random() < 0.3 else 0)
        c = rng.standard_normal(m)
        s = solve(lp(c, lo, up, a, b))
        ref = scipy_linprog(c, A_eq=a, b_eq=b, bounds=list(zip(lo, up)), method="highs")
        if ref.status == 2:
            assert s.status is Status.INFEASIBLE
        else:
            assert ref.status == 0
            assert s.objective == pytest.approx(ref.fun, abs=1e-7, rel=1e-9)


def _feasible_lp(seed, m=30, r=4):
    rng = np.random.default_rng(seed)
    lo = rng.uniform(1, 2, m)
    up = lo + rng.uniform(1, 10, m)
    a = rng.standard_normal((r, m))
    return lp(rng.standard_normal(m), lo, up, a, a @ rng.uniform(lo, up))


@pytest.mark.parametrize("seed", range(5))
def test_optimality_certificate(seed):
    p = _feasible_lp(seed)
    s = solve(p)
    assert s.optimal
    assert np.all(s.w >= p.lower - 1e-9) and np.all(s.w <= p.upper + 1e-9)
    assert s.max_residual <= 1e-8
    d = s.reduced_costs
    at_lo = s.var_status == 0
    at_up = s.var_status == 1
    # no single entering variable improves a minimization
    assert np.all(d[at_lo] >= -COST_TOL)
    assert np.all(d[at_up] <= COST_TOL)
    np.testing.assert_allclose(d[s.var_status == BASIC], 0, atol=1e-9)
    assert s.objective == pytest.approx(float(p.c @ s.w), abs=1e-10)


def test_repeat_solve_bit_identical():
    p = _feasible_lp(11, m=60, r=5)
    a, b = solve(p), solve(p)
    assert a.status == b.status and a.objective == b.objective
    assert np.array_equal(a.w, b.w)


def test_dump_round_trip(tmp_path):
    p = _feasible_lp(3, m=6, r=2)
    path = tmp_path / "p.lp"
    dump_lp(p, path)
    q = read_lp(path)
    for f in ("c", "lower", "upper", "a", "b"):
        assert np.array_equal(getattr(p, f), getattr(q, f))
    assert q.sense is p.sense
    buf = io.StringIO()
    dump_lp(q, buf)
    assert buf.getvalue() == path.read_text()


def test_max_is_negated_min():
    p = _feasible_lp(4)
    q = LinearProgram(p.c, p.lower, p.upper, p.a, p.b, Sense.MAX)
    nq = LinearProgram(-p.c, p.lower, p.upper, p.a, p.b, Sense.MIN)
    assert solve(q).objective == pytest.approx(-solve(nq).objective, abs=1e-10)


def test_rejects_crossed_bounds():
    with pytest.raises(ValueError):
        lp([1], 2, 1, np.zeros((0, 1)), [])
