"""Weighted-integral functional of the lifted field, its Riccati-type
comparison dynamics, blowup thresholds and predicted blowup times, and
term-by-term audits of the differential inequality along numerical
trajectories."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

import numpy as np
from scipy.integrate import quad

from .grid import (Field, cumulative_integral, first_derivative, integrate,
                   integrate_between)
from .lift import LiftParams, phi_derivative_fields, phi_field
from .reports import AuditReport
from .weight import WeightSpec, eval_weight_arrays, tail_integral_from

if TYPE_CHECKING:  # pragma: no cover
    from .solver import LayerState, Trace

__all__ = [
    "LyapunovConstants",
    "DIVERGED",
    "functional",
    "psi",
    "psi_integral",
    "lower_bound",
    "predict_blowup_time",
    "threshold_g0",
    "decompose_rhs",
    "forcing_field",
    "InequalityAudit",
    "inequality_audit",
    "compare_trajectory",
]

# marker returned by lower_bound once the comparison bound has blown up
DIVERGED = float("inf")


@dataclass(frozen=True)
class LyapunovConstants:
    """Coefficients of the comparison inequality
    G' >= 2 (1 - 1/eta) / c_y * G^2 - [lam + (3 + mu)(c_e + c_p t)] G."""

    eta: float
    c_y: float
    lam: float
    mu: float
    c_e: float
    c_p: float
    sigma: Optional[float] = None

    def __post_init__(self):
        if not 1.0 < self.eta < 2.0:
            raise ValueError("eta must lie in (1, 2)")
        if self.c_y <= 0.0:
            raise ValueError("weight L1 norm must be positive")
        if self.lam < 0.0 or self.mu <= 0.0:
            raise ValueError("lam must be >= 0 and mu > 0")
        if self.c_e < 0.0 or self.c_p < 0.0:
            raise ValueError("lift constants must be nonnegative")
        if self.sigma is not None and self.eta * self.sigma >= 1.0:
            raise ValueError("eta * sigma must be below 1")

    @property
    def quadratic_coef(self) -> float:
        return 2.0 * (1.0 - 1.0 / self.eta) / self.c_y

    def damping(self, t: float) -> float:
        return self.lam + (3.0 + self.mu) * (self.c_e + self.c_p * t)

    @classmethod
    def from_weight(cls, w: WeightSpec, p: LiftParams,
                    eta: Optional[float] = None) -> "LyapunovConstants":
        from .weight import choose_eta
        return cls(eta=eta if eta is not None else choose_eta(w.sigma),
                   c_y=w.c_y, lam=w.lam, mu=w.mu,
                   c_e=p.c_e, c_p=p.c_p, sigma=w.sigma)


def functional(a: Field, w: WeightSpec) -> float:
    """Weighted integral of the lifted field: trapezoid quadrature of
    a * weight over the grid plus the closed-form tail remainder with the
    far-field sample of a."""
    if a.diverged:
        raise ValueError("functional of a diverged field")
    wv, _, _ = eval_weight_arrays(w, a.grid.nodes)
    total = integrate(Field(a.grid, a.values * wv))
    if a.grid.y_max >= w.delta:
        total += float(a.values[-1]) * tail_integral_from(w, a.grid.y_max)
    return total


def psi(t: float, k: LyapunovConstants) -> float:
    """Damping-factor integrand: exp of minus the accumulated damping."""
    if t < 0.0:
        raise ValueError("psi requires t >= 0")
    expo = k.lam * t + (3.0 + k.mu) * (k.c_e * t + 0.5 * k.c_p * t * t)
    return math.exp(-expo)


def psi_integral(t: float, k: LyapunovConstants) -> float:
    """Adaptive quadrature of psi over [0, t] to 1e-12 tolerance."""
    if t < 0.0:
        raise ValueError("psi_integral requires t >= 0")
    if t == 0.0:
        return 0.0
    val, _ = quad(lambda s: psi(s, k), 0.0, t, epsabs=1e-12, epsrel=1e-12,
                  limit=200)
    return val


def lower_bound(t: float, g0: float, k: LyapunovConstants) -> float:
    """Comparison solution of the differential inequality starting at g0;
    returns DIVERGED once the bound has blown up."""
    if g0 <= 0.0:
        raise ValueError("g0 must be positive")
    if t < 0.0:
        raise ValueError("t must be nonnegative")
    bracket = 1.0 / g0 - (2.0 - 2.0 / k.eta) / k.c_y * psi_integral(t, k)
    if bracket <= 0.0:
        return DIVERGED
    return psi(t, k) / bracket


def predict_blowup_time(g0: float, k: LyapunovConstants,
                        horizon: float) -> Optional[float]:
    """Smallest t within the horizon at which the comparison bound blows
    up, by bisection on the monotone damping-factor integral; None when
    the horizon integral falls short of the required budget."""
    if g0 <= 0.0:
        raise ValueError("g0 must be positive")
    if horizon <= 0.0:
        raise ValueError("horizon must be positive")
    need = k.c_y / ((2.0 - 2.0 / k.eta) * g0)
    if psi_integral(horizon, k) < need:
        return None
    lo, hi = 0.0, horizon
    while hi - lo > 1e-15 * max(hi, 1.0):
        mid = 0.5 * (lo + hi)
        if psi_integral(mid, k) < need:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def threshold_g0(horizon: float, k: LyapunovConstants) -> float:
    """Initial-functional threshold guaranteeing blowup of the comparison
    bound by half the horizon."""
    if horizon <= 0.0:
        raise ValueError("horizon must be positive")
    return k.c_y / ((2.0 - 2.0 / k.eta) * psi_integral(0.5 * horizon, k))


def _phi_derivative_fields_any(t: float, grid, p: LiftParams):
    """Analytic lift derivatives, with the t = 0 limit handled."""
    if t > 0.0:
        return phi_derivative_fields(t, grid, p)
    y = grid.nodes
    gauss = np.exp(-0.25 * y * y)
    d1 = p.c_e * gauss / math.sqrt(math.pi)
    d2 = -p.c_e * y * gauss / (2.0 * math.sqrt(math.pi))
    d2 = d2.copy()
    d2[0] -= p.c_p
    return Field(grid, d1), Field(grid, d2)


def decompose_rhs(state: "LayerState", p: LiftParams,
                  w: WeightSpec) -> tuple[float, float, float, float, float, float]:
    """The six quadrature terms whose sum bounds dG/dt from below:

      r1 = int a w''                    over [0, inf)
      r2 = (1/2) int (D a)^2 w''        over [beta, inf)
      r3 = 2 int a^2 w                  over [0, inf)
      r4 = int (D a) a w'               over [0, beta)
      r5 = 2 int (D a) a w'             over [beta, inf)
      r6 = int (-2 a phi + (D phi) d_y a + (D a) d_y phi) w   over [0, inf)

    where D denotes the antiderivative from the wall.
    """
    if state.diverged:
        raise ValueError("decompose_rhs on a diverged state")
    grid = state.w.grid
    lift = phi_field(state.t, grid, p)
    a = Field(grid, state.w.values + lift.values)
    a_prime = first_derivative(a).values
    a_anti = cumulative_integral(a).values
    phi_anti = cumulative_integral(lift).values
    dphi, _ = _phi_derivative_fields_any(state.t, grid, p)
    wv, wd1, wd2 = eval_weight_arrays(w, grid.nodes)
    beta = w.beta
    y_max = grid.y_max

    r1 = integrate(Field(grid, a.values * wd2))
    r2 = 0.5 * integrate_between(Field(grid, a_anti**2 * wd2), beta, y_max)
    r3 = 2.0 * integrate(Field(grid, a.values**2 * wv))
    cross = Field(grid, a_anti * a.values * wd1)
    r4 = integrate_between(cross, 0.0, beta)
    r5 = 2.0 * integrate_between(cross, beta, y_max)
    l_of_a = (-2.0 * a.values * lift.values + phi_anti * a_prime
              + a_anti * dphi.values)
    r6 = integrate(Field(grid, l_of_a * wv))
    return r1, r2, r3, r4, r5, r6


def forcing_field(state: "LayerState", p: LiftParams,
                  p_bar_value: float) -> Field:
    """Forcing term of the lifted evolution equation,
    phi^2 - (D phi) d_y phi + c_p - p_bar - s; bounded below by
    phi^2 / 2 when the scenario is admissible."""
    grid = state.w.grid
    lift = phi_field(state.t, grid, p)
    phi_anti = cumulative_integral(lift).values
    dphi, _ = _phi_derivative_fields_any(state.t, grid, p)
    vals = (lift.values**2 - phi_anti * dphi.values + p.c_p - p_bar_value
            - state.s.values)
    return Field(grid, vals)


@dataclass
class InequalityStep:
    t: float
    g: float
    dg_dt: float
    rhs: float
    slack: float
    tol: float
    audited: bool

    @property
    def passed(self) -> bool:
        return (not self.audited) or self.slack >= -self.tol


@dataclass
class SnapshotTerms:
    t: float
    r_terms: tuple
    term_bounds_ok: tuple  # (r1 bound, r6 bound, sum vs rhs)


@dataclass
class InequalityAudit:
    steps: list = field(default_factory=list)
    snapshot_terms: list = field(default_factory=list)
    excluded_times: list = field(default_factory=list)

    @property
    def overall(self) -> bool:
        return all(s.passed for s in self.steps) and all(
            all(t.term_bounds_ok) for t in self.snapshot_terms)


def _audit_tolerances(trace: "Trace", g_arr, c_audit: float):
    h = trace.grid.h
    times = np.asarray(trace.times)
    tols = np.zeros_like(g_arr)
    for i in range(1, len(times) - 1):
        dt_local = 0.5 * (times[i + 1] - times[i - 1])
        tols[i] = c_audit * (h * h + dt_local) * (1.0 + g_arr[i] ** 2)
    return tols


def inequality_audit(trace: "Trace", w: WeightSpec, k: LyapunovConstants,
                     c_audit: float = 10.0,
                     exclude_near_blowup: int = 5) -> InequalityAudit:
    """Centered differencing of the recorded functional series against the
    comparison right-hand side, plus term-bound checks at stored
    snapshots.  The last few steps before a detected blowup are excluded
    from the verdict (differencing a diverging series is unreliable) and
    listed separately."""
    times = np.asarray(trace.times)
    g_arr = np.asarray(trace.series["G"])
    audit = InequalityAudit()
    if len(times) < 3:
        return audit
    last_audited = len(times) - 2
    if trace.outcome in ("blowup_detected", "step_underflow"):
        last_audited = max(1, len(times) - 1 - exclude_near_blowup)
    tols = _audit_tolerances(trace, g_arr, c_audit)
    for i in range(1, len(times) - 1):
        dg = (g_arr[i + 1] - g_arr[i - 1]) / (times[i + 1] - times[i - 1])
        rhs = k.quadratic_coef * g_arr[i] ** 2 - k.damping(times[i]) * g_arr[i]
        audited = i <= last_audited
        step_rec = InequalityStep(
            t=float(times[i]), g=float(g_arr[i]), dg_dt=float(dg),
            rhs=float(rhs), slack=float(dg - rhs), tol=float(tols[i]),
            audited=audited)
        audit.steps.append(step_rec)
        if not audited:
            audit.excluded_times.append(float(times[i]))

    from .lift import LiftParams as _LP
    p = _LP(k.c_e, k.c_p)
    for idx, state in trace.snapshots:
        if idx < 1 or idx > last_audited:
            continue
        r = decompose_rhs(state, p, w)
        g_val = g_arr[idx]
        t = times[idx]
        qtol = tols[idx] if tols[idx] > 0 else c_audit * trace.grid.h**2 * (
            1.0 + g_val**2)
        rhs = k.quadratic_coef * g_val**2 - k.damping(t) * g_val
        ok = (
            r[0] >= -k.lam * g_val - qtol,
            r[5] >= -(3.0 + k.mu) * (k.c_e + k.c_p * t) * g_val - qtol,
            sum(r) >= rhs - qtol,
        )
        audit.snapshot_terms.append(SnapshotTerms(
            t=float(t), r_terms=tuple(float(x) for x in r),
            term_bounds_ok=tuple(bool(b) for b in ok)))
    return audit


def compare_trajectory(trace: "Trace", g0: float, k: LyapunovConstants,
                       c_audit: float = 10.0,
                       exclude_near_blowup: int = 5) -> AuditReport:
    """Check the recorded functional series against the comparison lower
    bound, up to the earlier of bound divergence and the near-blowup
    exclusion window."""
    if g0 <= 0.0:
        raise ValueError("g0 must be positive")
    times = np.asarray(trace.times)
    g_arr = np.asarray(trace.series["G"])
    last = len(times)
    if trace.outcome in ("blowup_detected", "step_underflow"):
        last = max(1, len(times) - exclude_near_blowup)
    tols = _audit_tolerances(trace, g_arr, c_audit)
    report = AuditReport()
    worst = np.inf
    worst_t = times[0]
    checked = 0
    for i in range(last):
        lb = lower_bound(float(times[i]), g0, k)
        if lb == DIVERGED:
            break
        tol = tols[i] if tols[i] > 0 else c_audit * trace.grid.h**2 * (
            1.0 + g_arr[i] ** 2)
        margin = g_arr[i] - (lb - tol)
        checked += 1
        if margin < worst:
            worst = margin
            worst_t = times[i]
    report.add("trajectory stays above the comparison lower bound",
               checked > 0 and worst >= 0.0, worst if checked else 0.0,
               worst_t, detail=f"{checked} steps checked")
    return report
