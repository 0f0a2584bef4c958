import numpy as np
import pytest

from alleekit.errors import BracketInvalid, Inconclusive
from alleekit.model import KineticParams, coexisting_equilibria
from alleekit.temporal import (
    AttractorKind,
    Terminal,
    Trajectory,
    attractor_summary,
    bifurcation_diagram,
    heteroclinic_threshold,
    integrate_ode,
)


def test_origin_stays_put(p_main):
    tr = integrate_ode((0.0, 0.0), p_main, 50.0)
    assert tr.states.max() == 0.0
    assert tr.terminal is Terminal.CONVERGED_TO_POINT
    assert np.all(np.diff(tr.times) > 0)


def test_below_allee_threshold_goes_extinct(p_main):
    # u0 = 0.02 sits below the Allee threshold u2 = 0.0385.
    tr = integrate_ode((0.02, 0.01), p_main, 500.0)
    assert tr.terminal is Terminal.CONVERGED_TO_POINT
    assert tr.states[-1].max() < 1e-5
    s = attractor_summary(tr, transient=0.25 * tr.times[-1])
    assert s.kind is AttractorKind.EXTINCTION


def test_limit_cycle_at_sigma_18(p_main):
    p = p_main.with_sigma(1.8)
    e = coexisting_equilibria(p)[-1]
    tr = integrate_ode((e.u + 1e-3, e.v), p, 3000.0)
    assert tr.states.min() >= 0.0
    s = attractor_summary(tr, transient=1500.0)
    assert s.kind is AttractorKind.LIMIT_CYCLE
    assert s.u_max - s.u_min > 0.1
    assert s.period is not None and s.period > 0


def test_fixed_point_run(p_main):
    tr = integrate_ode((0.8, 0.3), p_main, 800.0)
    s = attractor_summary(tr, transient=400.0)
    assert s.kind is AttractorKind.FIXED_POINT
    assert s.u_min == s.u_max
    estar = coexisting_equilibria(p_main)[-1]
    assert abs(s.u_min - estar.u) < 1e-5


def test_tolerance_halving_consistency(p_main):
    a = integrate_ode((0.8, 0.3), p_main, 400.0, tol=1e-8)
    b = integrate_ode((0.8, 0.3), p_main, 400.0, tol=5e-9)
    assert np.abs(a.states[-1] - b.states[-1]).max() < 10 * 1e-8


def test_input_validation(p_main):
    with pytest.raises(ValueError):
        integrate_ode((-0.1, 0.2), p_main, 10.0)
    with pytest.raises(ValueError):
        integrate_ode((0.1, 0.2), p_main, 10.0, tol=1e-2)
    with pytest.raises(ValueError):
        integrate_ode((0.1, 0.2), p_main, -5.0)


def test_sample_times_are_honored(p_main):
    grid = np.linspace(0.0, 20.0, 41)
    tr = integrate_ode((0.8, 0.3), p_main, 20.0, sample_times=grid)
    np.testing.assert_allclose(tr.times, grid)


def test_classification_invariant_to_doubling_T(p_main):
    p = p_main.with_sigma(1.8)
    e = coexisting_equilibria(p)[-1]
    ic = (e.u + 1e-3, e.v)
    s1 = attractor_summary(integrate_ode(ic, p, 1500.0), transient=700.0)
    s2 = attractor_summary(integrate_ode(ic, p, 3000.0), transient=700.0)
    assert s1.kind is s2.kind is AttractorKind.LIMIT_CYCLE
    assert abs(s1.period - s2.period) < 0.01 * s2.period


def test_attractor_summary_needs_data(p_main):
    tr = integrate_ode((0.8, 0.3), p_main, 10.0)
    with pytest.raises(Inconclusive):
        attractor_summary(tr, transient=9.99)


def test_attractor_summary_synthetic_extinction():
    t = np.linspace(0.0, 100.0, 401)
    states = np.column_stack([1e-9 * np.exp(-t / 10.0), 1e-10 * np.exp(-t / 10.0)])
    tr = Trajectory(times=t, states=states, terminal=Terminal.REACHED_T)
    s = attractor_summary(tr, transient=10.0)
    assert s.kind is AttractorKind.EXTINCTION


@pytest.mark.slow
def test_predicate_signs_around_threshold(p_main):
    """sigma=1.7 loses the cycle, sigma=1.85 keeps it."""
    with pytest.raises(BracketInvalid):
        heteroclinic_threshold(p_main, (1.82, 1.85))
    with pytest.raises(BracketInvalid):
        heteroclinic_threshold(p_main, (1.60, 1.70))


@pytest.mark.slow
def test_heteroclinic_threshold_narrow_bracket(p_main):
    het = heteroclinic_threshold(p_main, (1.78, 1.80))
    assert abs(het - 1.789) <= 0.005
    assert het < 1.85660156367  # always below the Hopf point


@pytest.mark.slow
def test_period_grows_toward_threshold(p_main):
    periods = []
    for s in (1.790, 1.795, 1.800, 1.810, 1.820):
        p = p_main.with_sigma(s)
        e = coexisting_equilibria(p)[-1]
        tr = integrate_ode((e.u + 0.01, e.v + 0.01), p, 4000.0)
        summary = attractor_summary(tr, transient=2000.0)
        assert summary.kind is AttractorKind.LIMIT_CYCLE
        periods.append(summary.period)
    assert all(a > b for a, b in zip(periods, periods[1:]))


def test_bifurcation_diagram_rows(p_main):
    pts = bifurcation_diagram(p_main, [0.35, 0.5, 1.8, 2.0], t_sim=2000.0)
    by_sigma = {round(pt.sigma, 2): pt for pt in pts}
    # Below the axial fold: only the trivial state.
    assert len(by_sigma[0.35].equilibria) == 1
    # Above it: axial pair appears (and a coexisting state past sigma_TC).
    assert len(by_sigma[0.5].equilibria) == 4
    assert by_sigma[0.5].cycle is None  # below the global bifurcation
    cyc = by_sigma[1.8].cycle
    assert cyc is not None and cyc[1] - cyc[0] > 0.1
    assert by_sigma[2.0].cycle is None  # stable spiral above the Hopf point


def test_bifurcation_diagram_rejects_bad_grid(p_main):
    with pytest.raises(ValueError):
        bifurcation_diagram(p_main, [0.5, -1.0])
