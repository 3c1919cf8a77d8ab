import math

import numpy as np
import pytest
from scipy.integrate import quad

from blowup_lab import (Field, LayerState, LiftParams, LyapunovConstants,
                        Trace, build_grid, build_weight, compare_trajectory,
                        cumulative_integral, decompose_rhs, eval_weight,
                        forcing_field, functional, inequality_audit,
                        lower_bound, predict_blowup_time, psi, psi_integral,
                        threshold_g0)
from blowup_lab.lyapunov import DIVERGED


def _constants(eta=1.4, c_y=10.0, lam=1.0, mu=1.0, c_e=0.0, c_p=0.0):
    return LyapunovConstants(eta=eta, c_y=c_y, lam=lam, mu=mu,
                             c_e=c_e, c_p=c_p)


def test_constants_validation():
    with pytest.raises(ValueError):
        _constants(eta=2.5)
    with pytest.raises(ValueError):
        _constants(c_y=-1.0)
    with pytest.raises(ValueError):
        _constants(mu=0.0)
    with pytest.raises(ValueError):
        LyapunovConstants(eta=1.8, c_y=1.0, lam=0.0, mu=1.0,
                          c_e=0.0, c_p=0.0, sigma=0.6)


def test_functional_of_constant_field_is_weight_mass():
    w = build_weight(2.0, 16.0)
    grid = build_grid(50.0, 5000)
    ones = Field(grid, np.ones(grid.n_nodes))
    g1 = functional(ones, w)
    assert g1 == pytest.approx(w.c_y, rel=1e-5)
    # linear in the field
    assert functional(Field(grid, 3.0 * np.ones(grid.n_nodes)), w) == \
        pytest.approx(3.0 * g1, rel=1e-13)


def test_functional_tail_correction_matters():
    # truncating at y_max = 4 leaves an O(1) tail; the closed-form
    # remainder must recover it
    w = build_weight(2.0, 16.0)
    coarse = build_grid(4.0, 400)
    ones = Field(coarse, np.ones(coarse.n_nodes))
    assert functional(ones, w) == pytest.approx(w.c_y, rel=1e-4)


def test_psi_exact_value():
    k = _constants(lam=1.0, mu=1.0, c_e=1.0, c_p=2.0)
    # exponent at t=1: 1 + 4 * (1 + 1) = 9
    assert psi(1.0, k) == pytest.approx(math.exp(-9.0), rel=1e-14)
    assert psi(0.0, k) == 1.0


def test_psi_integral_closed_form():
    k = _constants(lam=2.0)
    for t in (0.1, 1.0, 3.0):
        assert psi_integral(t, k) == pytest.approx(
            (1.0 - math.exp(-2.0 * t)) / 2.0, rel=1e-12)
    assert psi_integral(0.0, k) == 0.0


def test_lower_bound_riccati_closed_form():
    # lam = 0, no lift: G(t) = 1 / (1/g0 - q t)
    k = _constants(lam=0.0)
    q = k.quadratic_coef
    g0 = 5.0
    t_star = 1.0 / (q * g0)
    for t in (0.0, 0.3 * t_star, 0.9 * t_star):
        assert lower_bound(t, g0, k) == pytest.approx(
            1.0 / (1.0 / g0 - q * t), rel=1e-10)
    assert lower_bound(1.01 * t_star, g0, k) == DIVERGED


def test_predictor_matches_riccati_time():
    k = _constants(lam=0.0)
    q = k.quadratic_coef
    for g0 in np.linspace(2.0, 40.0, 10):
        t_star = predict_blowup_time(g0, k, horizon=100.0)
        assert t_star == pytest.approx(1.0 / (q * g0), rel=1e-11)


def test_predictor_matches_damped_closed_form():
    k = _constants(lam=1.5)
    q = k.quadratic_coef
    for g0 in np.linspace(20.0, 100.0, 10):
        arg = 1.0 - k.lam / (q * g0)
        if arg <= 0.0:
            assert predict_blowup_time(g0, k, horizon=50.0) is None
            continue
        expected = -math.log(arg) / k.lam
        t_star = predict_blowup_time(g0, k, horizon=50.0)
        assert t_star == pytest.approx(expected, rel=1e-9)


def test_predictor_returns_none_below_budget():
    k = _constants(lam=2.0)
    q = k.quadratic_coef
    # with lam > 0 the damping budget saturates at q / lam * g0 = 1
    g0 = 0.99 * k.lam / q
    assert predict_blowup_time(g0, k, horizon=1000.0) is None


def test_threshold_monotone_and_exact_for_undamped():
    k = _constants(lam=0.0)
    q = k.quadratic_coef
    for horizon in (0.5, 1.0, 2.0):
        assert threshold_g0(horizon, k) == pytest.approx(
            2.0 / (q * horizon), rel=1e-10)
    k2 = _constants(lam=1.0)
    assert threshold_g0(1.0, k2) > threshold_g0(2.0, k2) > threshold_g0(4.0, k2)
    # the threshold guarantees blowup by half the horizon
    thr = threshold_g0(2.0, k2)
    t_star = predict_blowup_time(1.0000001 * thr, k2, horizon=2.0)
    assert t_star is not None and t_star <= 1.0 + 1e-6


def _constant_state(grid, w_value):
    w = Field(grid, np.full(grid.n_nodes, w_value))
    s = Field(grid, np.zeros(grid.n_nodes))
    return LayerState(t=0.0, w=w, s=s, v=cumulative_integral(w))


def test_decompose_rhs_constant_field_oracle():
    # a == 1 with no lift: each term reduces to a weight integral with a
    # scipy.quad oracle
    w = build_weight(2.0, 16.0)
    grid = build_grid(50.0, 5000)
    state = _constant_state(grid, 1.0)
    r1, r2, r3, r4, r5, r6 = decompose_rhs(state, LiftParams(0.0, 0.0), w)

    val = lambda y: eval_weight(w, y)[0]
    d1 = lambda y: eval_weight(w, y)[1]
    d2 = lambda y: eval_weight(w, y)[2]
    pts = [0.5, 1.0, 2.0]
    o1, _ = quad(d2, 0.0, grid.y_max, points=pts, limit=300)
    o2, _ = quad(lambda y: 0.5 * y * y * d2(y), 1.0, grid.y_max,
                 points=pts, limit=300)
    o3, _ = quad(lambda y: 2.0 * val(y), 0.0, grid.y_max, points=pts,
                 limit=300)
    o4, _ = quad(lambda y: y * d1(y), 0.0, 1.0, points=[0.5], limit=300)
    o5, _ = quad(lambda y: 2.0 * y * d1(y), 1.0, grid.y_max, points=pts,
                 limit=300)
    # the curvature of the weight jumps at the plateau junction, so the
    # one-sided trapezoid rule carries an O(h) error on r1 and r2
    assert r1 == pytest.approx(o1, rel=3e-2)
    assert r2 == pytest.approx(o2, rel=3e-2)
    assert r3 == pytest.approx(o3, rel=1e-4)
    assert r4 == pytest.approx(o4, rel=1e-3)
    assert r5 == pytest.approx(o5, rel=1e-3)
    assert r6 == 0.0
    # and the leading slope term equals -Y'(0) = -6A/5 up to truncation
    assert r1 == pytest.approx(-1.2 * w.a_coef, rel=3e-2)


def test_decompose_rhs_quadratic_scaling():
    w = build_weight(2.0, 16.0)
    grid = build_grid(30.0, 1500)
    r_one = decompose_rhs(_constant_state(grid, 1.0), LiftParams(0.0, 0.0), w)
    r_two = decompose_rhs(_constant_state(grid, 2.0), LiftParams(0.0, 0.0), w)
    # r1 is linear in a; r2, r3, r4, r5 are quadratic; r6 vanishes
    assert r_two[0] == pytest.approx(2.0 * r_one[0], rel=1e-12)
    for i in (1, 2, 3, 4):
        assert r_two[i] == pytest.approx(4.0 * r_one[i], rel=1e-12)


def test_forcing_field_dominates_half_phi_squared():
    grid = build_grid(30.0, 600)
    p = LiftParams(1.0, 0.5)
    y = grid.nodes
    s = Field(grid, -0.1 * (1.0 - np.exp(-y)))
    w = Field(grid, np.zeros(grid.n_nodes))
    state = LayerState(t=0.5, w=w, s=s, v=cumulative_integral(w))
    from blowup_lab import phi_field
    lift = phi_field(0.5, grid, p)
    forcing = forcing_field(state, p, p_bar_value=0.3)
    assert np.min(forcing.values - 0.5 * lift.values ** 2) >= -1e-12


def _riccati_trace(grid, k, g0, dt, n_steps, corrupt=False):
    q = k.quadratic_coef
    trace = Trace(grid=grid)
    for i in range(n_steps + 1):
        t = i * dt
        g = 1.0 / (1.0 / g0 - q * t)
        if corrupt and i == n_steps // 2:
            g *= 0.2
        trace.times.append(t)
        trace.dts.append(dt if i else 0.0)
        trace.series.setdefault("G", []).append(g)
    return trace


def test_inequality_audit_accepts_exact_riccati_series():
    k = _constants(lam=0.0)
    grid = build_grid(10.0, 100)
    w = build_weight(2.0, 16.0)
    trace = _riccati_trace(grid, k, g0=5.0, dt=1e-3, n_steps=400)
    audit = inequality_audit(trace, w, k)
    assert audit.overall
    assert len(audit.steps) == 399


def test_inequality_audit_flags_corrupted_series():
    k = _constants(lam=0.0)
    grid = build_grid(10.0, 100)
    w = build_weight(2.0, 16.0)
    trace = _riccati_trace(grid, k, g0=5.0, dt=1e-3, n_steps=400,
                           corrupt=True)
    audit = inequality_audit(trace, w, k)
    assert not audit.overall


def test_compare_trajectory_verdicts():
    k = _constants(lam=0.0)
    grid = build_grid(10.0, 100)
    trace = _riccati_trace(grid, k, g0=5.0, dt=1e-3, n_steps=400)
    assert compare_trajectory(trace, 5.0, k).overall
    # the same series claimed to start from a much larger g0 falls below
    # the advertised bound
    assert not compare_trajectory(trace, 10.0, k).overall
