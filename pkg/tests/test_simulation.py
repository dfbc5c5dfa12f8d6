import math

import numpy as np
import pytest

from causal_bounds.parallel import replicate_rng
from causal_bounds.simulation import (
    Scenario,
    analytic_ate,
    draw_covariates,
    generate_study,
    positivity_violation_rate,
    run_table,
    treatment_probability,
    true_ate,
)


def test_propensity_at_zero():
    p = treatment_probability(np.zeros((1, 5)), np.zeros(1))[0]
    assert p == pytest.approx(1 / (1 + math.exp(-0.904)), abs=1e-15)
    assert round(p, 4) == 0.7118


def test_covariate_law():
    x = draw_covariates(100_000, np.random.default_rng(0))
    assert abs(x[:, 0].mean()) <= 0.01
    slope = np.polyfit(x[:, 0], x[:, 1], 1)[0]
    assert abs(slope + 1 / 3) <= 0.02


def test_scenario_intercepts():
    assert Scenario("S1").a1 == 0.0775
    assert Scenario("S2").a1 == 0.998
    with pytest.raises(ValueError):
        Scenario("S3")


@pytest.mark.parametrize("sid", ["S1", "S2"])
def test_study_shape_and_consistency(sid):
    st = generate_study(Scenario(sid), replicate_rng(1, 2), n=500)
    d = st.dataset
    assert d.k == 4 and d.names == ("x1", "x2", "x3", "x4")
    assert np.array_equal(d.y, d.z * st.y1 + (1 - d.z) * st.y0)
    assert np.all((st.true_ps > 0) & (st.true_ps < 1))


def test_same_stream_same_study():
    a = generate_study(Scenario("S1"), replicate_rng(4, 9), n=50)
    b = generate_study(Scenario("S1"), replicate_rng(4, 9), n=50)
    assert np.array_equal(a.dataset.y, b.dataset.y) and np.array_equal(a.x5, b.x5)


def test_noise_free_hook_is_deterministic_in_x():
    s = Scenario("S2", outcome_sd=0.0)
    st = generate_study(s, replicate_rng(0, 0), n=1000, x5_effect=0.0)
    x1, x2, x3, x4 = st.dataset.x.T
    want = (0.998 - 0.0654) + 0.2 * x1 + 0.3 * x2 - 0.6 * x1 * x2 + 0.3 * x3 - 0.4 * x4
    np.testing.assert_allclose(st.y1 - st.y0, want, rtol=0, atol=1e-14)


@pytest.mark.parametrize("sid, target", [("S1", 0.21), ("S2", 1.13)])
def test_true_ate(sid, target):
    s = Scenario(sid)
    t = true_ate(s, 1000, seed=0)
    assert t.units == 1_000_000
    assert abs(t.value - target) <= 0.02
    assert abs(t.value - analytic_ate(s)) <= 5 * t.se


def test_violation_rate_limits():
    studies = [generate_study(Scenario("S1"), replicate_rng(0, i), n=400) for i in range(5)]
    assert positivity_violation_rate(studies, 1e-12) == 0.0
    r1 = positivity_violation_rate(studies, 0.1)
    r2 = positivity_violation_rate(studies, 0.01)
    assert 0 < r2 <= r1 < 1


def test_run_table_bookkeeping():
    rep = run_table(Scenario("S1"), ("Proposed", "QB"), (0.1, 0.01), (1.0, 2.0), ("D1",), replicates=4, seed=3, n=300)
    assert len(rep.rows) == 4
    for row in rep.rows:
        mine = [r for r in rep.records if r.setting.key == row.setting.key]
        ok = [r for r in mine if r.status == "Optimal"]
        assert row.feasible_count == len(ok) and row.replicates == 4
        if ok:
            assert row.length == row.avg_hi - row.avg_lo
            cov = np.mean([r.psi_lo <= rep.true_ate <= r.psi_hi for r in ok])
            assert row.coverage == cov and 0 <= row.coverage <= 1
    for r in rep.records:
        if r.setting.method == "QB" and r.setting.lam == 1.0:
            assert abs(r.psi_lo - r.sipw_psi) <= 1e-8 and abs(r.psi_hi - r.sipw_psi) <= 1e-8


def test_run_table_workers_do_not_change_results():
    kw = dict(methods=("Proposed",), deltas=(0.01,), bases=("D2",), replicates=4, seed=5, n=200, true_value=0.2)
    a = run_table(Scenario("S2"), workers=1, **kw)
    b = run_table(Scenario("S2"), workers=2, **kw)
    assert repr(a.records) == repr(b.records)
    assert repr(a.rows) == repr(b.rows)


def test_run_table_rejects_bad_level():
    with pytest.raises(ValueError):
        run_table(Scenario("S1"), bases=("D9",), replicates=1)
