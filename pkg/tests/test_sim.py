import math
import warnings

import numpy as np
import pytest

from smpfpt.errors import DomainError, UAViolationError, UnsupportedOperationError
from smpfpt.estimate import estimate
from smpfpt.model import SmpModel, SojournDist, moments_from_distributions
from smpfpt.passage import higher_moments
from smpfpt.sim import SimConfig, empirical_passage, passage_sample, simulate_trace

import helpers


def _two_cycle(a, b):
    da, db = SojournDist.deterministic(a), SojournDist.deterministic(b)
    return SmpModel([[0, 1], [1, 0]], distributions=[[None, da], [db, None]])


def test_deterministic_two_cycle_trace():
    tr = simulate_trace(_two_cycle(2.0, 3.0), SimConfig(seed=0, replications=1, max_transitions=4))
    assert tr.src.tolist() == [0, 1, 0, 1]
    assert tr.dst.tolist() == [1, 0, 1, 0]
    assert tr.sojourn.tolist() == [2.0, 3.0, 2.0, 3.0]


def test_same_seed_same_trace():
    model = helpers.patient_dist_model()
    cfg = SimConfig(seed=99, replications=500)
    a, b = simulate_trace(model, cfg), simulate_trace(model, cfg)
    for name in ("rep", "src", "dst", "sojourn"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))
    c = simulate_trace(model, SimConfig(seed=100, replications=500))
    assert not np.array_equal(a.sojourn[:50], c.sojourn[:50])


def test_replication_streams_do_not_depend_on_count():
    model = helpers.patient_dist_model()
    small = simulate_trace(model, SimConfig(seed=5, replications=10))
    big = simulate_trace(model, SimConfig(seed=5, replications=1000))
    n = len(small)
    np.testing.assert_array_equal(big.sojourn[:n], small.sojourn)
    np.testing.assert_array_equal(big.rep[:n], small.rep)


def test_absorbing_start_records_nothing():
    cfg = SimConfig(seed=1, replications=3, initial_state=2)
    assert len(simulate_trace(helpers.patient_dist_model(), cfg)) == 0


def test_entering_absorbing_state_ends_with_one_self_loop():
    tr = simulate_trace(helpers.patient_dist_model(), SimConfig(seed=4, replications=200))
    last = np.r_[tr.rep[1:] != tr.rep[:-1], True]
    assert (tr.src[last] == 2).all() and (tr.dst[last] == 2).all()
    assert ((tr.src == 2).sum()) == tr.replications


def test_running_on_past_absorption():
    cfg = SimConfig(seed=4, replications=2, max_transitions=50, stop_at_absorbing=False)
    tr = simulate_trace(helpers.patient_dist_model(), cfg)
    assert len(tr) == 100


def test_total_transitions_caps_trace():
    cfg = SimConfig(seed=4, replications=10_000, total_transitions=1234)
    tr = simulate_trace(helpers.patient_dist_model(), cfg)
    full = simulate_trace(helpers.patient_dist_model(), SimConfig(seed=4, replications=10_000))
    assert len(tr) == 1234
    np.testing.assert_array_equal(tr.sojourn, full.sojourn[:1234])


def test_initial_distribution():
    cfg = SimConfig(seed=8, replications=20_000, initial_state=[0.25, 0.75, 0.0],
                    max_transitions=1)
    tr = simulate_trace(helpers.patient_dist_model(), cfg)
    frac = (tr.src == 1).mean()
    assert abs(frac - 0.75) <= 4 * math.sqrt(0.75 * 0.25 / 20_000)
    with pytest.raises(DomainError):
        simulate_trace(helpers.patient_dist_model(),
                       SimConfig(seed=8, initial_state=[0.5, 0.6, 0.0]))
    with pytest.raises(DomainError):
        simulate_trace(helpers.patient_dist_model(), SimConfig(seed=8, initial_state=3))


def test_config_bounds():
    with pytest.raises(DomainError):
        SimConfig(seed=0, replications=0)
    with pytest.raises(DomainError):
        SimConfig(seed=0, max_transitions=0)


def test_moment_model_cannot_be_simulated():
    with pytest.raises(UnsupportedOperationError):
        simulate_trace(helpers.patient_model(), SimConfig(seed=0))
    with pytest.raises(UnsupportedOperationError):
        empirical_passage(helpers.patient_model(), 2, SimConfig(seed=0))


def test_degenerate_passage_has_zero_se():
    emp = empirical_passage(_two_cycle(2.0, 3.0), 1, SimConfig(seed=0, replications=1000))
    assert emp.mean[0].tolist() == [2.0, 5.0]
    assert emp.se[0].tolist() == [0.0, 0.0]


def test_example_deterministic_passage_and_absorbing_return():
    emp = empirical_passage(helpers.patient_dist_model("deterministic"), 2,
                            SimConfig(seed=12, replications=100_000))
    assert abs(emp.mean[0, 0] - 33.9) <= 4 * emp.se[0, 0]
    assert emp.mean[0, 2] == 0.0 and emp.se[0, 2] == 0.0


def test_passage_requires_at_least_one_step():
    s = passage_sample(_two_cycle(2.0, 3.0), 0, 0, SimConfig(seed=0, replications=10))
    assert (s.steps == 2).all() and (s.times == 5.0).all()


def test_non_ua_target_rejected():
    with pytest.raises(UAViolationError):
        empirical_passage(helpers.patient_dist_model(), 0, SimConfig(seed=0))


def test_censoring_warns_and_excludes():
    # geometric number of 1 -> 1 self-loops before leaving; a cutoff of 2 censors half
    d = SojournDist.deterministic(1.0)
    model = SmpModel([[0.5, 0.5], [1.0, 0.0]], distributions=[[d, d], [d, None]])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        emp = empirical_passage(model, 1, SimConfig(seed=3, replications=4000, max_transitions=2))
    assert any("cutoff" in str(w.message) for w in caught)
    assert emp.censored[0] > 0 and emp.n[0] + emp.censored[0] == 4000
    assert emp.warnings


@pytest.mark.parametrize("k, family", list(enumerate(["exponential", "uniform", "gamma", "lognormal"])))
def test_sojourn_sampler_second_moment(k, family):
    rng = np.random.default_rng(k)
    d = helpers.random_dist(rng, families=(family,))
    model = SmpModel([[0, 1], [1, 0]], distributions=[[None, d], [SojournDist.deterministic(0.0), None]])
    t = passage_sample(model, 0, 1, SimConfig(seed=21, replications=100_000)).times
    for r in (1, 2):
        x = t ** r
        assert abs(x.mean() - d.moment(r)) <= 4 * x.std(ddof=1) / math.sqrt(x.size)


def test_trace_round_trip_recovers_model():
    rng = np.random.default_rng(17)
    p = helpers.random_stochastic(rng, 4, 0.8)
    model = helpers.random_dist_model(rng, p)
    tr = simulate_trace(model, SimConfig(seed=17, replications=1, max_transitions=400_000,
                                         stop_at_absorbing=False))
    est = estimate(tr, 4, order=2)
    e1, e2 = moments_from_distributions(model.distributions, 2)
    n_row = est.counts.sum(axis=1)
    for i in range(4):
        for j in range(4):
            se_p = math.sqrt(p[i, j] * (1 - p[i, j]) / n_row[i])
            assert abs(est.p_hat[i, j] - p[i, j]) <= 3 * se_p + 1e-12
            n = est.counts[i, j]
            if n:
                se = math.sqrt(max(e2[i, j] - e1[i, j] ** 2, 0.0) / n)
                assert abs(est.e_hat[0][i, j] - e1[i, j]) <= 4 * se + 1e-12


def test_empirical_matches_analytic_on_example():
    model = helpers.patient_dist_model("exponential")
    pm = higher_moments(model, 2, 2)
    emp = empirical_passage(model, 2, SimConfig(seed=31, replications=100_000), order=2)
    ok = (np.abs(emp.mean - pm.mu) <= 4 * emp.se) | (emp.se == 0) & (emp.mean == pm.mu)
    assert ok.all()
