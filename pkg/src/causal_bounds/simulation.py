"""Synthetic observational studies with a hidden confounder, and the
replication harness that averages bounds over many of them.

Five covariates follow a Gaussian autoregression, X1 ~ N(0, 1) and
X_{k+1} | X_k ~ N(-X_k / 3, 1). Only X1..X4 are observed; X5 confounds both
the outcomes and the treatment assignment, which also depends on Y(1).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .basis import LADDER_LEVELS, d4_extra_columns, expand, ladder
from .bounds import solve_bounds
from .data import Dataset, SensitivityConfig
from .errors import CausalBoundsError
from .estimators import sipw
from .logistic import fit_mar_propensity
from .parallel import map_ordered, replicate_rng
from .quantile import qb_bounds

log = logging.getLogger(__name__)

SCENARIO_INTERCEPT = {"S1": 0.0775, "S2": 0.998}
OUTCOME_SD = 0.25  # the "1/4" in N(mu, 1/4), read as a standard deviation
TRUTH_POOL_UNITS = 1_000_000


@dataclass(frozen=True)
class Scenario:
    id: str = "S1"
    n: int = 1000
    replicates: int = 1000
    outcome_sd: float = OUTCOME_SD

    def __post_init__(self):
        if self.id not in SCENARIO_INTERCEPT:
            raise ValueError(f"unknown scenario {self.id!r}; expected S1 or S2")
        if self.n < 2 or self.replicates < 1:
            raise ValueError("need n >= 2 and replicates >= 1")

    @property
    def a1(self) -> float:
        return SCENARIO_INTERCEPT[self.id]


@dataclass(frozen=True, eq=False)
class SimulatedStudy:
    dataset: Dataset
    x5: np.ndarray
    y1: np.ndarray
    y0: np.ndarray
    true_ps: np.ndarray


def outcome_means(xbar: np.ndarray, a1: float, x5_effect: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    x1, x2, x3, x4, x5 = xbar.T
    mu1 = a1 + 0.4 * x1 + 0.4 * x2 + 0.6 * x1 * x2 + 0.5 * x3 - 0.7 * x4 + 0.2 * x5_effect * x5
    mu0 = 0.0654 + 0.2 * x1 + 0.1 * x2 + 1.2 * x1 * x2 + 0.2 * x3 - 0.3 * x4 + 0.6 * x5_effect * x5
    return mu1, mu0


def treatment_probability(xbar: np.ndarray, y1: np.ndarray) -> np.ndarray:
    x1, x2, x3, x4, x5 = xbar.T
    return 1.0 / (1.0 + np.exp(-0.904 + 0.5 * x1 + 0.5 * x2 + 0.5 * x3 - 0.2 * x4 - x5 + 0.3 * y1))


def draw_covariates(n: int, rng: np.random.Generator) -> np.ndarray:
    xbar = np.empty((n, 5))
    xbar[:, 0] = rng.standard_normal(n)
    for k in range(1, 5):
        xbar[:, k] = -xbar[:, k - 1] / 3.0 + rng.standard_normal(n)
    return xbar


def generate_study(
    s: Scenario,
    rng: np.random.Generator,
    n: Optional[int] = None,
    outcome_sd: Optional[float] = None,
    x5_effect: float = 1.0,
) -> SimulatedStudy:
    """One simulated study of ``n`` units (default ``s.n``).

    ``outcome_sd`` overrides the scenario's noise level and ``x5_effect``
    scales the hidden confounder's effect on the outcomes; both are test hooks.
    """
    n = s.n if n is None else n
    outcome_sd = s.outcome_sd if outcome_sd is None else outcome_sd
    xbar = draw_covariates(n, rng)
    mu1, mu0 = outcome_means(xbar, s.a1, x5_effect)
    y1 = mu1 + outcome_sd * rng.standard_normal(n)
    y0 = mu0 + outcome_sd * rng.standard_normal(n)
    ps = treatment_probability(xbar, y1)
    z = (rng.random(n) < ps).astype(float)
    y = z * y1 + (1 - z) * y0
    ds = Dataset(y, z, xbar[:, :4], ("x1", "x2", "x3", "x4"))
    return SimulatedStudy(ds, xbar[:, 4].copy(), y1, y0, ps)


def analytic_ate(s: Scenario) -> float:
    """Population ATE in closed form: E[X1 X2] = -1/3 and every other covariate term has mean zero."""
    return (s.a1 + 0.6 * (-1.0 / 3.0)) - (0.0654 + 1.2 * (-1.0 / 3.0))


@dataclass(frozen=True)
class TrueAte:
    value: float
    se: float
    units: int


def true_ate(s: Scenario, m: int, seed: int, n: Optional[int] = None) -> TrueAte:
    """Mean of Y(1) minus mean of Y(0), pooled over ``m`` generated studies.

    Potential outcomes are drawn from the same per-replicate streams used by
    :func:`run_table`, so replicate i here is the study analysed there.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    n = s.n if n is None else n
    total1 = total0 = 0.0
    sum_sq = 0.0
    count = 0
    for i in range(m):
        st = generate_study(s, replicate_rng(seed, i), n)
        diff = st.y1 - st.y0
        total1 += st.y1.sum()
        total0 += st.y0.sum()
        sum_sq += float(diff @ diff)
        count += n
    value = (total1 - total0) / count
    var = max(sum_sq / count - value**2, 0.0)
    return TrueAte(value, math.sqrt(var / count), count)


def positivity_violation_rate(studies: Iterable[SimulatedStudy], delta: float) -> float:
    """Share of units whose true propensity falls outside [delta, 1 - delta]."""
    bad = total = 0
    for st in studies:
        ps = st.true_ps
        bad += int(np.count_nonzero((ps < delta) | (ps > 1 - delta)))
        total += ps.shape[0]
    return bad / total if total else 0.0


@dataclass(frozen=True)
class Setting:
    method: str  # "Proposed" or "QB"
    basis: str = ""  # ladder level for Proposed
    delta: Optional[float] = None
    lam: Optional[float] = None

    @property
    def key(self) -> tuple:
        return (self.method, self.basis, self.delta, self.lam)


@dataclass(frozen=True)
class ReplicateRecord:
    replicate: int
    setting: Setting
    psi_lo: float
    psi_hi: float
    status: str
    sipw_psi: float = float("nan")


@dataclass
class ReportRow:
    scenario: str
    setting: Setting
    avg_lo: float
    avg_hi: float
    length: float
    coverage: float
    feasible_count: int
    replicates: int


@dataclass
class SimulationReport:
    scenario: str
    true_ate: float
    rows: list = field(default_factory=list)
    records: list = field(default_factory=list)
    violation_rates: dict = field(default_factory=dict)
    custom_failures: int = 0

    def row(self, method: str, basis: str = "", delta=None, lam=None) -> ReportRow:
        key = Setting(method, basis, delta, lam).key
        for r in self.rows:
            if r.setting.key == key:
                return r
        raise KeyError(key)


def settings_for(methods: Sequence[str], deltas: Sequence[float], lambdas: Sequence[float], bases: Sequence[str]) -> list:
    out = []
    for meth in methods:
        if meth == "Proposed":
            out += [Setting("Proposed", b, dl) for b in bases for dl in deltas]
        elif meth == "QB":
            out += [Setting("QB", "", None, lam) for lam in lambdas]
        else:
            raise ValueError(f"unknown method {meth!r}")
    return out


def _analyse_replicate(args) -> tuple:
    scenario, settings, seed, i, n, folds, deltas_diag = args
    st = generate_study(scenario, replicate_rng(seed, i), n)
    d = st.dataset
    records = []
    custom_failed = False
    gcache: dict = {}
    ehat = None
    ehat_failed = False
    for setting in settings:
        psi_lo = psi_hi = float("nan")
        status = "Infeasible"
        sipw_psi = float("nan")
        try:
            if setting.method == "Proposed":
                if setting.basis not in gcache:
                    basis = ladder(setting.basis, d.k)
                    custom = d4_extra_columns(d.x) if setting.basis == "D4" else None
                    gcache[setting.basis] = expand(basis, d, custom)
                g = gcache[setting.basis]
                res = solve_bounds(d, g, SensitivityConfig(delta=setting.delta, basis_terms=()))
            else:
                if ehat is None and not ehat_failed:
                    try:
                        ehat = fit_mar_propensity(d).ehat
                    except CausalBoundsError:
                        ehat_failed = True
                if ehat_failed:
                    raise CausalBoundsError("propensity fit failed")
                res = qb_bounds(d, ehat, setting.lam, seed=seed * 1_000_003 + i, folds=folds)
                sipw_psi = sipw(d, ehat).psi
            psi_lo, psi_hi, status = res.psi_lo, res.psi_hi, res.status
        except CausalBoundsError as exc:
            if setting.basis == "D4" and "x1 - x3" in str(exc):
                custom_failed = True
            log.debug("replicate %d %s: %s", i, setting, exc)
        records.append(ReplicateRecord(i, setting, psi_lo, psi_hi, status, sipw_psi))
    viol = {dl: (int(np.count_nonzero((st.true_ps < dl) | (st.true_ps > 1 - dl))), n) for dl in deltas_diag}
    return records, viol, custom_failed


def run_table(
    s: Scenario,
    methods: Sequence[str] = ("Proposed",),
    deltas: Sequence[float] = (0.01,),
    lambdas: Sequence[float] = (2.0,),
    bases: Sequence[str] = ("D1",),
    replicates: Optional[int] = None,
    seed: int = 0,
    n: Optional[int] = None,
    folds: int = 5,
    workers: Optional[int] = None,
    true_value: Optional[float] = None,
    diagnostic_deltas: Sequence[float] = (0.1, 0.01, 0.001),
) -> SimulationReport:
    """Average bounds, length and coverage per setting over simulated studies.

    Coverage and the averages use feasible replicates only. The true ATE
    defaults to the pooled Y(1) - Y(0) mean over about 10^6 simulated units
    (the analysed studies plus further ones from the same seed); pass
    ``true_value`` to override it.
    """
    reps = s.replicates if replicates is None else replicates
    if reps < 1:
        raise ValueError("replicates must be >= 1")
    for b in bases:
        if b not in LADDER_LEVELS:
            raise ValueError(f"unknown basis level {b!r}")
    n = s.n if n is None else n
    settings = settings_for(methods, deltas, lambdas, bases)
    jobs = [(s, settings, seed, i, n, folds, tuple(diagnostic_deltas)) for i in range(reps)]
    results = map_ordered(_analyse_replicate, jobs, workers)

    records = []
    viol_bad = {dl: 0 for dl in diagnostic_deltas}
    units = 0
    failures = 0
    for recs, viol, custom_failed in results:
        records += recs
        for dl, (bad, cnt) in viol.items():
            viol_bad[dl] += bad
        units += n
        failures += int(custom_failed)
    if failures:
        log.warning("%d replicate(s) had |x1 - x3| < 1e-8; D4 counted infeasible there", failures)
    if true_value is None:
        pool = max(reps, math.ceil(TRUTH_POOL_UNITS / n))
        truth = true_ate(s, pool, seed, n).value
    else:
        truth = true_value

    report = SimulationReport(s.id, truth, custom_failures=failures)
    report.records = records
    report.violation_rates = {dl: viol_bad[dl] / units for dl in diagnostic_deltas}
    for setting in settings:
        mine = [r for r in records if r.setting.key == setting.key]
        ok = [r for r in mine if r.status == "Optimal"]
        if ok:
            lo = np.array([r.psi_lo for r in ok])
            hi = np.array([r.psi_hi for r in ok])
            avg_lo, avg_hi = float(lo.mean()), float(hi.mean())
            cover = float(np.mean((lo <= truth) & (truth <= hi)))
        else:
            avg_lo = avg_hi = cover = float("nan")
        report.rows.append(ReportRow(s.id, setting, avg_lo, avg_hi, avg_hi - avg_lo, cover, len(ok), len(mine)))
    return report
