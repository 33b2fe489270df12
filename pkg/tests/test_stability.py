import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from bmcgan.controller import BmcParams
from bmcgan.dynamics import FAMILIES, WGAN_LINEAR, SystemSpec
from bmcgan.errors import UnboundedObjectiveError
from bmcgan.integrator import SdeConfig, Trajectory, integrate_batch
from bmcgan.stability import (ConvergenceCriterion, StabilityReport, check_condition, detect_convergence,
                              empirical_rate, phi_bound, unbounded_report)

GRID = np.arange(0.0, 100.0 + 5e-5, 1e-4)


def grid_oracle(rho2, beta, alphas, c):
    """Dense grid search over [0, 100] refined by bounded Brent around the best node."""
    a1, a2, a3 = alphas
    quad = a2 ** 2 + a3 ** 2 / 2
    const = (1 + a1 ** 2 / 2) * c ** 2 + 2 * c + 0.5
    obj = lambda x: -(rho2 ** 2 / 2) * x ** (2 * beta) + quad * x ** 2 + const
    vals = obj(GRID)
    i = int(np.argmax(vals))
    lo, hi = GRID[max(i - 1, 0)], GRID[min(i + 1, GRID.size - 1)]
    if hi > lo:
        r = minimize_scalar(lambda x: -obj(x), bounds=(lo, hi), method="bounded",
                            options={"xatol": 1e-12})
        if -r.fun > vals[i]:
            return -r.fun, r.x
    return vals[i], GRID[i]


def test_phi_constant_only_fixture():
    phi, x = phi_bound(BmcParams(0.1, 0.01, 2.0), (0, 0, 0), 1.0)
    assert (phi, x) == (3.5, 0.0)
    assert grid_oracle(0.01, 2.0, (0, 0, 0), 1.0)[0] == pytest.approx(3.5, rel=1e-12)


def test_phi_unit_fixture():
    phi, x = phi_bound(BmcParams(0.0, 1.0, 2.0), (0, 1, 0), 0.0)
    assert phi == 1.0 and x == 1.0
    o_phi, o_x = grid_oracle(1.0, 2.0, (0, 1, 0), 0.0)
    assert o_phi == pytest.approx(1.0, rel=1e-9)
    assert o_x == pytest.approx(1.0, abs=1e-4)


@pytest.mark.parametrize("rho2,beta", [(0.01, 2.0), (1.0, 1.5), (3.0, 4.0)])
def test_phi_c_zero_no_alpha(rho2, beta):
    assert phi_bound(BmcParams(0.0, rho2, beta), (0, 0, 0), 0.0) == (0.5, 0.0)
    phi, x = grid_oracle(rho2, beta, (0, 0, 0), 0.0)
    assert phi == 0.5 and x == 0.0


def test_phi_matches_grid_oracle_on_random_draws():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        rho2 = rng.uniform(0.5, 2.0)
        beta = rng.uniform(1.5, 3.0)
        alphas = tuple(rng.uniform(0, 1, 3))
        c = rng.uniform(-2, 2)
        phi, x = phi_bound(BmcParams(0.0, rho2, beta), alphas, c)
        o_phi, o_x = grid_oracle(rho2, beta, alphas, c)
        assert phi == pytest.approx(o_phi, rel=1e-6)
        assert o_phi <= phi + 1e-12 * abs(phi)


@given(st.floats(0.05, 2), st.floats(0.05, 2), st.floats(1.2, 3), st.floats(0, 1), st.floats(0, 2))
def test_phi_decreases_in_rho2(r_small, r_extra, beta, alpha, c):
    lo = phi_bound(BmcParams(0, r_small, beta), (0.1, alpha, alpha), c)[0]
    hi = phi_bound(BmcParams(0, r_small + r_extra, beta), (0.1, alpha, alpha), c)[0]
    assert hi <= lo + 1e-12 * abs(lo)


@given(st.floats(0.05, 2), st.floats(1.2, 3), st.floats(0, 1), st.floats(0, 1), st.floats(0, 2))
def test_phi_increases_in_alpha(rho2, beta, a_small, a_extra, c):
    lo = phi_bound(BmcParams(0, rho2, beta), (a_small, a_small, a_small), c)[0]
    hi = phi_bound(BmcParams(0, rho2, beta), (a_small + a_extra,) * 3, c)[0]
    assert hi >= lo - 1e-12 * abs(lo)


@pytest.mark.parametrize("params", [BmcParams(0.1, 0.0, 2.0), BmcParams(0.1, 0.01, 1.0),
                                    BmcParams(0.1, 0.01, 0.5)])
def test_phi_unbounded_outside_hypotheses(params):
    with pytest.raises(UnboundedObjectiveError):
        phi_bound(params, (0, 0, 0), 1.0)
    rep = unbounded_report(params)
    assert not rep.condition_holds
    assert rep.to_dict()["phi_unbounded"] is True


def test_condition_holds_example():
    rep = check_condition(BmcParams(3.0, 1.0, 2.0), (0, 0, 0), 0.0, epsilon=0.1)
    assert rep.phi_bound == 0.5
    assert rep.margin == 4.0
    assert rep.condition_holds
    assert rep.theoretical_rate == pytest.approx(-3.9, abs=1e-15)


def test_condition_fails_for_default_cell():
    rep = check_condition(BmcParams(0.1, 0.01, 2.0), (0, 0, 0), 1.0)
    assert rep.margin == pytest.approx(0.005 - 3.5)
    assert not rep.condition_holds
    assert rep.theoretical_rate is None


@given(st.floats(0.01, 2), st.floats(1.1, 3), st.floats(0, 3))
def test_zero_rho1_never_holds(rho2, beta, c):
    rep = check_condition(BmcParams(0.0, rho2, beta), (0.1, 0.1, 0.1), c)
    assert not rep.condition_holds and rep.margin < 0


def test_epsilon_must_lie_below_margin():
    with pytest.raises(ValueError):
        check_condition(BmcParams(3.0, 1.0, 2.0), (0, 0, 0), 0.0, epsilon=4.0)
    with pytest.raises(ValueError):
        check_condition(BmcParams(3.0, 1.0, 2.0), (0, 0, 0), 0.0, epsilon=0.0)
    rep = check_condition(BmcParams(3.0, 1.0, 2.0), (0, 0, 0), 0.0)
    assert rep.epsilon == 1e-3


def test_report_invariants():
    with pytest.raises(ValueError):
        StabilityReport(phi_bound=1.0, margin=-1.0, condition_holds=True)
    with pytest.raises(ValueError):
        StabilityReport(phi_bound=1.0, margin=-1.0, condition_holds=False, theoretical_rate=-1.0)


def synthetic(norms, dt=1.0, terminated=None):
    norms = np.asarray(norms, dtype=float)
    steps = np.arange(norms.size)
    return Trajectory(steps, np.stack([norms, np.zeros_like(norms)], axis=1), dt, 0, terminated)


def test_all_zero_converges_at_zero():
    assert detect_convergence(synthetic(np.zeros(500))) == 0


def test_exponential_decay_detected_at_five():
    traj = synthetic(np.exp(-np.arange(0, 30.0)))
    assert detect_convergence(traj, ConvergenceCriterion(tol=1e-2, window=1)) == 5


def test_blown_up_never_converges():
    assert detect_convergence(synthetic(np.zeros(200), terminated=199)) is None


def test_window_requires_sustained_run():
    norms = np.ones(400)
    norms[10:50] = 0.0      # too short for window 100
    norms[200:] = 0.0
    assert detect_convergence(synthetic(norms)) == 200


def test_max_steps_limits_search():
    norms = np.ones(400)
    norms[300:] = 0.0
    assert detect_convergence(synthetic(norms), ConvergenceCriterion(window=50, max_steps=299)) is None
    assert detect_convergence(synthetic(norms), ConvergenceCriterion(window=50, max_steps=399)) == 300


@given(st.lists(st.floats(0, 1), min_size=1, max_size=60), st.floats(1e-3, 0.5), st.floats(1, 2),
       st.integers(1, 10))
def test_convergence_monotone_in_tol(norms, tol, factor, window):
    traj = synthetic(norms)
    tight = detect_convergence(traj, ConvergenceCriterion(tol=tol, window=window))
    loose = detect_convergence(traj, ConvergenceCriterion(tol=tol * factor, window=window))
    if tight is not None:
        assert loose is not None and loose <= tight


def test_rate_of_exact_exponential():
    t = np.arange(0, 200) * 0.1
    assert empirical_rate(synthetic(np.exp(-0.5 * t), dt=0.1)) == pytest.approx(-0.5, abs=1e-9)


def test_rate_of_constant():
    assert empirical_rate(synthetic(np.full(50, 3.0))) == 0.0


def test_rate_needs_two_points():
    with pytest.raises(ValueError):
        empirical_rate(synthetic([1.0, 0.5]), tail_fraction=0.4)
    with pytest.raises(ValueError):
        empirical_rate(synthetic([1.0, 0.5]), tail_fraction=0.0)


def test_rate_respects_theoretical_bound():
    spec = SystemSpec(FAMILIES[WGAN_LINEAR], 0.0)
    params = BmcParams(3.0, 1.0, 2.0)
    rep = check_condition(params, (0, 0, 0), 0.0)
    cfg = SdeConfig(dt=0.001, n_steps=20_000, record_stride=10)
    rates = [empirical_rate(t) for t, _ in integrate_batch(spec, params, cfg, range(16))]
    med = float(np.median(rates))
    assert med < 0
    assert med <= rep.theoretical_rate + 0.5
