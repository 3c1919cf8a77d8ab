import numpy as np
import pytest

from blowup_lab import (Field, LiftParams, ScenarioConfig, axis_restriction_run,
                        build_grid, build_weight, cumulative_integral,
                        energy_audit, init_state, lifted_field, run,
                        sign_audits, step)


def _zero(t):
    return 0.0


def _cfg(grid, w0, s0, horizon, **kw):
    return ScenarioConfig(grid=grid, p_bar=_zero, u_bar_e=_zero, s_wall=_zero,
                          s_far=_zero, w0=w0, s0=s0, horizon=horizon, **kw)


def _bump(grid, amp, center=1.2, width=0.8):
    y = grid.nodes
    vals = amp * (np.exp(-(((y - center) / width) ** 2))
                  - np.exp(-(((y + center) / width) ** 2)))
    return Field(grid, vals)


def test_zero_data_is_a_fixed_point():
    grid = build_grid(10.0, 100)
    zero = Field(grid, np.zeros(grid.n_nodes))
    cfg = _cfg(grid, zero, zero, horizon=0.05)
    state = init_state(cfg, LiftParams(0.0, 0.0))
    for _ in range(20):
        state = step(state, cfg, LiftParams(0.0, 0.0), 1e-3)
    assert np.max(np.abs(state.w.values)) <= 1e-14
    assert np.max(np.abs(state.s.values)) <= 1e-14


def test_transport_velocity_is_antiderivative_of_w():
    grid = build_grid(10.0, 200)
    cfg = _cfg(grid, _bump(grid, 1.0), Field(grid, np.zeros(grid.n_nodes)),
               horizon=0.01)
    p = LiftParams(0.0, 0.0)
    state = init_state(cfg, p)
    state = step(state, cfg, p, 1e-3)
    expected = cumulative_integral(state.w)
    assert np.array_equal(state.v.values, expected.values)


def test_init_state_rejections():
    grid = build_grid(10.0, 64)
    zero = Field(grid, np.zeros(grid.n_nodes))
    p = LiftParams(0.0, 0.0)

    # positive wall temperature gradient
    cfg = _cfg(grid, _bump(grid, 1.0), zero, horizon=0.1)
    cfg.s_wall = lambda t: 0.1
    with pytest.raises(ValueError, match="wall value of s"):
        init_state(cfg, p)

    # positive initial s
    cfg = _cfg(grid, _bump(grid, 1.0), Field(grid, np.full(grid.n_nodes, 0.2)),
               horizon=0.1)
    with pytest.raises(ValueError, match="initial s must be nonpositive"):
        init_state(cfg, p)

    # w not vanishing at the wall
    w0 = Field(grid, np.ones(grid.n_nodes))
    with pytest.raises(ValueError, match="vanish at the wall"):
        init_state(_cfg(grid, w0, zero, horizon=0.1), p)

    # wall incompatibility of s
    s0 = Field(grid, np.full(grid.n_nodes, -0.3))
    with pytest.raises(ValueError, match="match the wall boundary"):
        init_state(_cfg(grid, _bump(grid, 1.0), s0, horizon=0.1), p)

    # lifted field negative somewhere with no lift to save it
    with pytest.raises(ValueError, match="lifted initial field"):
        init_state(_cfg(grid, _bump(grid, -1.0), zero, horizon=0.1), p)


def test_step_rejects_bad_dt():
    grid = build_grid(10.0, 64)
    zero = Field(grid, np.zeros(grid.n_nodes))
    cfg = _cfg(grid, zero, zero, horizon=0.1)
    state = init_state(cfg, LiftParams(0.0, 0.0))
    with pytest.raises(ValueError):
        step(state, cfg, LiftParams(0.0, 0.0), 0.0)


def test_run_completed_and_audits_pass():
    grid = build_grid(20.0, 400)
    zero = Field(grid, np.zeros(grid.n_nodes))
    y = grid.nodes
    s0 = Field(grid, -0.1 * (1.0 - np.exp(-y)))
    cfg = _cfg(grid, _bump(grid, 1.5), s0, horizon=0.2)
    cfg.s_far = lambda t: -0.1
    p = LiftParams(0.5, 0.0)
    w = build_weight(2.0, 16.0)
    trace = run(cfg, p, w)
    assert trace.outcome == "completed"
    assert trace.event_time is None
    assert trace.times[0] == 0.0
    assert trace.times[-1] == pytest.approx(0.2, abs=1e-9)
    assert sign_audits(trace, p).overall
    # snapshots carry usable states
    idx, state = trace.snapshots[-1]
    a = lifted_field(state, p)
    assert np.min(a.values[1:-1]) > -1e-10


def test_run_detects_blowup_for_large_data():
    grid = build_grid(20.0, 400)
    zero = Field(grid, np.zeros(grid.n_nodes))
    cfg = _cfg(grid, _bump(grid, 150.0), zero, horizon=2.0,
               dt_init=1e-4, blowup_cap=1e5)
    p = LiftParams(0.0, 0.0)
    w = build_weight(2.0, 16.0)
    trace = run(cfg, p, w)
    assert trace.outcome == "blowup_detected"
    assert trace.event_time is not None and trace.event_time < 0.1
    assert trace.series["w_inf"][-1] >= 1e5


def test_run_underflows_on_incompatible_far_field():
    # a Dirichlet jump at the far boundary can never satisfy the
    # step-acceptance criterion, so dt collapses below dt_min
    grid = build_grid(20.0, 100)
    zero = Field(grid, np.zeros(grid.n_nodes))
    cfg = _cfg(grid, zero, zero, horizon=1.0, dt_min=1e-8)
    cfg.u_bar_e = lambda t: 1.0
    trace = run(cfg, LiftParams(0.0, 0.0), build_weight(2.0, 16.0))
    assert trace.outcome == "step_underflow"


MMS_YMAX = 8.0


def _mms_fields(t, y):
    w = np.exp(-t) * y * np.exp(-y)
    s = -0.5 * np.exp(-t) * (1.0 - np.exp(-y))
    v = np.exp(-t) * (1.0 - (1.0 + y) * np.exp(-y))
    return w, s, v


def _mms_sources():
    def src_w(t, y):
        w, s, v = _mms_fields(t, y)
        dw = np.exp(-t) * (1.0 - y) * np.exp(-y)
        d2w = np.exp(-t) * (y - 2.0) * np.exp(-y)
        return -w - w * w + v * dw + s - d2w

    def src_s(t, y):
        w, s, v = _mms_fields(t, y)
        ds = -0.5 * np.exp(-t) * np.exp(-y)
        d2s = 0.5 * np.exp(-t) * np.exp(-y)
        return -s - w * s + v * ds - d2s

    return src_w, src_s


def _mms_cfg(n_cells, horizon, dt):
    grid = build_grid(MMS_YMAX, n_cells)
    y = grid.nodes
    w0, s0, _ = _mms_fields(0.0, y)
    src_w, src_s = _mms_sources()
    cfg = ScenarioConfig(
        grid=grid, p_bar=_zero,
        u_bar_e=lambda t: float(_mms_fields(t, MMS_YMAX)[0]),
        s_wall=_zero,
        s_far=lambda t: float(_mms_fields(t, MMS_YMAX)[1]),
        w0=Field(grid, w0), s0=Field(grid, s0),
        horizon=horizon, dt_init=dt,
        source_w=src_w, source_s=src_s)
    return cfg, grid


def _mms_error(n_cells, horizon, dt):
    cfg, grid = _mms_cfg(n_cells, horizon, dt)
    p = LiftParams(0.0, 0.0)
    state = init_state(cfg, p)
    n_steps = int(round(horizon / dt))
    for _ in range(n_steps):
        state = step(state, cfg, p, dt)
    w_exact, s_exact, _ = _mms_fields(state.t, grid.nodes)
    return (np.max(np.abs(state.w.values - w_exact))
            + np.max(np.abs(state.s.values - s_exact)))


def test_mms_smoke_error_small():
    # coarse manufactured-solution sanity check; the convergence-order
    # study lives in the acceptance tests
    err = _mms_error(200, 0.02, 1e-4)
    assert err < 5e-4


def test_axis_restriction_zero_data_stays_zero():
    grid = build_grid(10.0, 200)
    zero = Field(grid, np.zeros(grid.n_nodes))
    trace = axis_restriction_run(
        coeff_dxu=lambda t: np.sin(t), coeff_v=lambda t: 1.0,
        coeff_dxtheta=lambda t: -0.5, w0=zero, s0=zero, grid=grid,
        horizon=5.0, dt=1e-2)
    assert trace.outcome == "completed"
    assert max(trace.series["energy"]) <= 1e-12


def test_axis_restriction_energy_audit():
    grid = build_grid(10.0, 200)
    y = grid.nodes
    w0 = Field(grid, 0.01 * y * np.exp(-y))
    s0 = Field(grid, -0.01 * (1.0 - np.exp(-y)) * np.exp(-y))
    trace = axis_restriction_run(
        coeff_dxu=lambda t: np.cos(t), coeff_v=lambda t: np.sin(t),
        coeff_dxtheta=lambda t: 0.5, w0=w0, s0=s0, grid=grid,
        horizon=2.0, dt=1e-3)
    assert trace.outcome == "completed"
    report = energy_audit(trace, c_t=1.0)
    assert report.overall, str(report)


def test_energy_audit_flags_super_exponential_growth():
    grid = build_grid(10.0, 64)
    zero = Field(grid, np.zeros(grid.n_nodes))
    trace = axis_restriction_run(
        coeff_dxu=_zero, coeff_v=_zero, coeff_dxtheta=_zero,
        w0=zero, s0=zero, grid=grid, horizon=1.0, dt=1e-2)
    # doctor the recorded energies to grow far faster than the bound allows
    trace.series["energy"] = [0.01 * np.exp(50.0 * t) for t in trace.times]
    report = energy_audit(trace, c_t=1.0)
    assert not report.overall


def test_sign_audit_flags_positive_s():
    grid = build_grid(20.0, 200)
    zero = Field(grid, np.zeros(grid.n_nodes))
    cfg = _cfg(grid, _bump(grid, 1.0), zero, horizon=0.05)
    p = LiftParams(0.0, 0.0)
    trace = run(cfg, p, build_weight(2.0, 16.0))
    assert sign_audits(trace, p).overall
    trace.series["s_max"] = [0.5 for _ in trace.times]
    assert not sign_audits(trace, p).overall
