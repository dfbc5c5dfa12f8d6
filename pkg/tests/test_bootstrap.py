import csv

import numpy as np
import pytest

from causal_bounds.basis import ladder
from causal_bounds.bootstrap import PROPOSED, QB, bootstrap_bounds, percentile, write_replicates
from causal_bounds.data import Dataset, SensitivityConfig
from causal_bounds.errors import AllReplicatesInfeasible, SeparationDetected
from causal_bounds.parallel import replicate_rng
from causal_bounds.simulation import Scenario, generate_study

from oracles import interpolated_percentile


@pytest.fixture(scope="module")
def data():
    return generate_study(Scenario("S1"), replicate_rng(11, 0), n=200).dataset


def test_percentile_example():
    assert percentile([1, 2, 3], 0.025) == pytest.approx(1.05, abs=1e-15)
    assert percentile([3, 1, 2], 0.025) == interpolated_percentile([1, 2, 3], 0.025)


def test_percentile_random_matches_order_statistics():
    rng = np.random.default_rng(0)
    for n in (1, 2, 5, 37, 200):
        v = rng.standard_normal(n)
        for p in (0.025, 0.5, 0.975):
            assert abs(percentile(v, p) - interpolated_percentile(v, p)) <= 1e-12


def test_d1_all_feasible():
    d = generate_study(Scenario("S1"), replicate_rng(11, 0), n=1000).dataset
    cfg = SensitivityConfig(delta=0.01, basis_terms=tuple(ladder("D1", 4).labels), seed=1, bootstrap_b=20)
    s = bootstrap_bounds(d, cfg)
    assert s.feasible_count == 20 == s.b_requested
    assert s.boot_lower <= s.boot_upper
    assert s.metadata["n_used"] == 20


def test_excludes_infeasible(data):
    cfg = SensitivityConfig(delta=0.12, basis_terms=("1", "x1", "x2", "x1^2"), seed=2, bootstrap_b=30)
    s = bootstrap_bounds(data, cfg)
    ok = [r for r in s.replicate_records if r.status == "Optimal"]
    assert s.feasible_count == len(ok) <= s.b_requested
    assert s.boot_lower == percentile([r.psi_lo for r in ok], 0.025)
    assert s.boot_upper == percentile([r.psi_hi for r in ok], 0.975)


def test_deterministic_across_workers(data):
    cfg = SensitivityConfig(delta=0.05, lam=2.0, basis_terms=("1", "x1"), seed=4, bootstrap_b=12)
    a = bootstrap_bounds(data, cfg, PROPOSED, workers=1)
    b = bootstrap_bounds(data, cfg, PROPOSED, workers=3)
    # repr, because NaN endpoints of infeasible replicates never compare equal
    assert repr(a.replicate_records) == repr(b.replicate_records)
    assert (a.boot_lower, a.boot_upper, a.feasible_count) == (b.boot_lower, b.boot_upper, b.feasible_count)


def test_qb_method(data):
    cfg = SensitivityConfig(lam=1.5, seed=3, bootstrap_b=8)
    s = bootstrap_bounds(data, cfg, QB)
    assert s.feasible_count == 8
    with pytest.raises(ValueError):
        bootstrap_bounds(data, SensitivityConfig(bootstrap_b=2), QB)


def test_all_infeasible():
    # treated units have x = 0 while the controls' x total is positive
    d = Dataset(np.arange(8.0), [1, 1, 1, 1, 0, 0, 0, 0], np.r_[np.zeros(4), np.ones(4)].reshape(-1, 1))
    with pytest.raises(AllReplicatesInfeasible) as info:
        bootstrap_bounds(d, SensitivityConfig(basis_terms=("1", "x1"), bootstrap_b=10))
    assert len(info.value.summary.replicate_records) == 10


def test_separation_counts_as_infeasible(data, monkeypatch):
    import causal_bounds.bootstrap as mod

    real = mod.fit_mar_propensity

    def flaky(d):
        # pretend resamples whose first unit is treated are separated
        if d.z[0] == 1:
            raise SeparationDetected("forced")
        return real(d)

    monkeypatch.setattr(mod, "fit_mar_propensity", flaky)
    cfg = SensitivityConfig(delta=0.05, lam=3.0, basis_terms=("1", "x1"), seed=6, bootstrap_b=16)
    s = bootstrap_bounds(data, cfg, workers=1)
    forced = []
    for i in range(16):
        idx = replicate_rng(6, i).integers(0, data.n, size=data.n)
        forced.append(data.z[idx[0]] == 1)
    assert any(forced) and not all(forced)
    for r, f in zip(s.replicate_records, forced):
        if f:
            assert r.status == "Infeasible"
    assert s.feasible_count <= 16 - sum(forced)


def test_replicate_csv(tmp_path, data):
    cfg = SensitivityConfig(delta=0.05, seed=1, bootstrap_b=5)
    s = bootstrap_bounds(data, cfg)
    p = tmp_path / "r.csv"
    write_replicates(s, p)
    rows = list(csv.DictReader(p.open()))
    assert [int(r["replicate"]) for r in rows] == list(range(5))
    assert float(rows[0]["psi_lo"]) == s.replicate_records[0].psi_lo


def test_rejects_zero_replicates(data):
    with pytest.raises(ValueError):
        bootstrap_bounds(data, SensitivityConfig(bootstrap_b=0))
