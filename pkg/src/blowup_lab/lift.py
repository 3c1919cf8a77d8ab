"""Closed-form lift field for the auxiliary forced heat problem.

The lift phi(t, y) interpolates between a wall value of 0 and a far field
of c_e + c_p * t; it is added to the solver unknown to make the working
field nonnegative.  This module evaluates phi and its y-derivatives
analytically, certifies its four structural properties (monotonicity in y,
nonnegativity, the far-field bound, concavity), and provides a
Crank-Nicolson reference solver used as an independent check of the
closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .grid import Field, Grid, second_derivative

__all__ = [
    "LiftParams",
    "erf",
    "erfc",
    "phi",
    "phi_field",
    "phi_derivatives",
    "phi_derivative_fields",
    "LiftPropertyCheck",
    "LiftPropertyReport",
    "verify_lift_properties",
    "solve_lift_reference",
]

_SQRT_PI = math.sqrt(math.pi)
_SERIES_CUT = 3.0


@dataclass(frozen=True)
class LiftParams:
    """Far-field constants of the lift: phi -> c_e + c_p * t as y -> inf."""

    c_e: float
    c_p: float

    def __post_init__(self):
        if self.c_e < 0.0 or self.c_p < 0.0:
            raise ValueError("lift constants must be nonnegative")


def _erf_series(z: np.ndarray) -> np.ndarray:
    # erf(z) = 2 z exp(-z^2)/sqrt(pi) * sum_k (2 z^2)^k / (1*3*...*(2k+1));
    # all terms positive, no cancellation for |z| <= 3.
    z2 = 2.0 * z * z
    term = np.ones_like(z)
    total = np.ones_like(z)
    for k in range(1, 120):
        term = term * z2 / (2.0 * k + 1.0)
        total += term
        if np.all(term <= 1e-18 * total):
            break
    return 2.0 * z * np.exp(-z * z) / _SQRT_PI * total


def _erfc_cf(z: np.ndarray) -> np.ndarray:
    # Backward-evaluated continued fraction for erfc, valid for z >= 3:
    # erfc(z) = exp(-z^2)/sqrt(pi) / (z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
    t = z.copy()
    for k in range(80, 0, -1):
        t = z + (0.5 * k) / t
    return np.exp(-z * z) / _SQRT_PI / t


def erf(z):
    """Error function, absolute error below 1e-14 on finite inputs.

    Accepts scalars or arrays; odd symmetry is exact by construction.
    """
    z_arr = np.asarray(z, dtype=float)
    scalar = z_arr.ndim == 0
    z_arr = np.atleast_1d(z_arr)
    if not np.all(np.isfinite(z_arr)):
        raise ValueError("erf requires finite input")
    az = np.abs(z_arr)
    out = np.empty_like(az)
    small = az <= _SERIES_CUT
    if np.any(small):
        out[small] = _erf_series(az[small])
    if np.any(~small):
        out[~small] = 1.0 - _erfc_cf(az[~small])
    out = np.where(z_arr < 0, -out, out)
    return float(out[0]) if scalar else out


def erfc(z):
    """Complementary error function 1 - erf(z)."""
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    scalar = np.asarray(z).ndim == 0
    if not np.all(np.isfinite(z_arr)):
        raise ValueError("erfc requires finite input")
    out = np.empty_like(z_arr)
    big = z_arr > _SERIES_CUT
    if np.any(big):
        out[big] = _erfc_cf(z_arr[big])
    if np.any(~big):
        out[~big] = 1.0 - erf(z_arr[~big])
    return float(out[0]) if scalar else out


def _phi_arrays(t: float, y: np.ndarray, p: LiftParams) -> np.ndarray:
    if t == 0.0:
        return p.c_e * erf(0.5 * y)
    u1 = y / math.sqrt(4.0 * (t + 1.0))
    out = p.c_e * erf(u1)
    if p.c_p != 0.0:
        u2 = y / math.sqrt(4.0 * t)
        # t * bracket, written to stay finite as t -> 0+:
        # (y^2/2)(erf(u2) - 1) + t erf(u2) + y sqrt(t/pi) exp(-u2^2)
        out = out + p.c_p * (
            -0.5 * y * y * erfc(u2)
            + t * erf(u2)
            + y * math.sqrt(t / math.pi) * np.exp(-u2 * u2)
        )
    return out


def phi(t: float, y: float, p: LiftParams) -> float:
    """Lift value at a point; phi(t, 0) = 0 and phi(0, y) = c_e * erf(y/2)."""
    if t < 0.0 or y < 0.0:
        raise ValueError("phi requires t >= 0 and y >= 0")
    return float(_phi_arrays(float(t), np.atleast_1d(float(y)), p)[0])


def phi_field(t: float, grid: Grid, p: LiftParams) -> Field:
    """Lift sampled on all grid nodes at time t."""
    if t < 0.0:
        raise ValueError("phi requires t >= 0")
    return Field(grid, _phi_arrays(float(t), grid.nodes, p))


def _phi_derivative_arrays(t: float, y: np.ndarray, p: LiftParams):
    tp1 = t + 1.0
    u1 = y / math.sqrt(4.0 * tp1)
    gauss1 = np.exp(-u1 * u1)
    d1 = p.c_e * gauss1 / math.sqrt(math.pi * tp1)
    d2 = -p.c_e * y * gauss1 / (2.0 * _SQRT_PI * tp1 ** 1.5)
    if p.c_p != 0.0:
        u2 = y / math.sqrt(4.0 * t)
        ec = erfc(u2)
        d1 = d1 + p.c_p * (-y * ec + 2.0 * math.sqrt(t / math.pi) * np.exp(-u2 * u2))
        d2 = d2 - p.c_p * ec
    return d1, d2


def phi_derivatives(t: float, y: float, p: LiftParams) -> tuple[float, float]:
    """Analytic (d_y phi, d_y^2 phi); the first is >= 0 and the second <= 0
    up to rounding.  Requires t > 0 (the formulas contain 1/sqrt(t))."""
    if t <= 0.0:
        raise ValueError("phi_derivatives requires t > 0")
    if y < 0.0:
        raise ValueError("phi_derivatives requires y >= 0")
    d1, d2 = _phi_derivative_arrays(float(t), np.atleast_1d(float(y)), p)
    return float(d1[0]), float(d2[0])


def phi_derivative_fields(t: float, grid: Grid, p: LiftParams) -> tuple[Field, Field]:
    """Analytic y-derivative fields of the lift on all grid nodes (t > 0)."""
    if t <= 0.0:
        raise ValueError("phi_derivative_fields requires t > 0")
    d1, d2 = _phi_derivative_arrays(float(t), grid.nodes, p)
    return Field(grid, d1), Field(grid, d2)


@dataclass
class LiftPropertyCheck:
    name: str
    passed: bool
    worst_violation: float
    worst_t: float
    worst_y: float


@dataclass
class LiftPropertyReport:
    checks: list[LiftPropertyCheck] = field(default_factory=list)

    @property
    def overall(self) -> bool:
        return all(c.passed for c in self.checks)

    def __str__(self) -> str:
        lines = []
        for c in self.checks:
            verdict = "pass" if c.passed else "FAIL"
            lines.append(
                f"{c.name}: {verdict} (worst violation {c.worst_violation:.3e} "
                f"at t={c.worst_t:g}, y={c.worst_y:g})"
            )
        lines.append(f"overall: {'pass' if self.overall else 'FAIL'}")
        return "\n".join(lines)


def _record(report, name, violations, times, grid):
    # violations: 2-D array (time, node), positive means violated
    idx = np.unravel_index(np.argmax(violations), violations.shape)
    worst = float(violations[idx])
    report.checks.append(
        LiftPropertyCheck(
            name=name,
            passed=worst <= 0.0,
            worst_violation=worst,
            worst_t=float(times[idx[0]]),
            worst_y=float(grid.nodes[idx[1]]),
        )
    )


def verify_lift_properties(
    p: LiftParams, grid: Grid, times, dt_probe: float = 1e-3
) -> LiftPropertyReport:
    """Check, on all (time, node) pairs:

      (1) d_y phi >= -tol, (2) phi >= -tol, (3) phi <= c_e + c_p t + tol,
      (4) d_y^2 phi <= tol,

    with tol = 1e-10 * (1 + c_e + c_p t), plus the residual check that phi
    satisfies the forced heat equation to second order in the grid spacing
    and the time-probe step.  Derivative checks are skipped at t = 0.
    """
    times = [float(t) for t in times]
    if not times or any(t < 0.0 for t in times):
        raise ValueError("times must be nonempty with all entries >= 0")
    report = LiftPropertyReport()
    tol = np.array([1e-10 * (1.0 + p.c_e + p.c_p * t) for t in times])[:, None]

    vals = np.stack([phi_field(t, grid, p).values for t in times])
    _record(report, "phi >= 0", -vals - tol, times, grid)
    far = np.array([p.c_e + p.c_p * t for t in times])[:, None]
    _record(report, "phi <= far-field bound", vals - far - tol, times, grid)

    tpos = [t for t in times if t > 0.0]
    if tpos:
        tol_pos = np.array([1e-10 * (1.0 + p.c_e + p.c_p * t) for t in tpos])[:, None]
        d1 = np.stack([_phi_derivative_arrays(t, grid.nodes, p)[0] for t in tpos])
        d2 = np.stack([_phi_derivative_arrays(t, grid.nodes, p)[1] for t in tpos])
        _record(report, "d_y phi >= 0", -d1 - tol_pos, tpos, grid)
        _record(report, "d_y^2 phi <= 0", d2 - tol_pos, tpos, grid)

        # heat-equation residual with module stencils and a centered time probe
        h = grid.h
        res_tol = 10.0 * (1.0 + p.c_e + p.c_p * (max(tpos) + 1.0)) * (
            h * h + dt_probe * dt_probe
        ) + 1e-8
        worst = np.full((len(tpos), grid.n_nodes), -np.inf)
        for i, t in enumerate(tpos):
            dt_loc = min(dt_probe, 0.5 * t)
            lo = phi_field(t - dt_loc, grid, p).values
            hi = phi_field(t + dt_loc, grid, p).values
            dphi_dt = (hi - lo) / (2.0 * dt_loc)
            lap = second_derivative(phi_field(t, grid, p)).values
            resid = np.abs(dphi_dt - lap - p.c_p)
            worst[i, 1:-1] = resid[1:-1] - res_tol
        _record(report, "heat-equation residual", worst, tpos, grid)
    return report


def solve_lift_reference(
    p: LiftParams, grid: Grid, t_end: float, n_steps: int
) -> Field:
    """Crank-Nicolson reference solution of the lift problem on the given
    grid: d_t phi = d_y^2 phi + c_p, phi(t, 0) = 0, phi(t, y_max) set to the
    far-field value, phi(0, y) = c_e * erf(y/2).

    Independent of the closed form; used to cross-check phi.
    """
    if t_end <= 0.0 or n_steps < 1:
        raise ValueError("t_end must be positive and n_steps >= 1")
    dt = t_end / n_steps
    h = grid.h
    r = 0.5 * dt / (h * h)
    n_in = grid.n_nodes - 2

    ab = np.zeros((3, n_in))
    ab[0, 1:] = -r
    ab[1, :] = 1.0 + 2.0 * r
    ab[2, :-1] = -r

    u = p.c_e * erf(0.5 * grid.nodes)
    t = 0.0
    for k in range(n_steps):
        t_new = (k + 1) * dt
        rhs = u[1:-1] + r * (u[2:] - 2.0 * u[1:-1] + u[:-2]) + dt * p.c_p
        left_new = 0.0
        right_new = p.c_e + p.c_p * t_new
        rhs[0] += r * left_new
        rhs[-1] += r * right_new
        u_in = solve_banded((1, 1), ab, rhs)
        u = np.concatenate(([left_new], u_in, [right_new]))
        t = t_new
    return Field(grid, u)
