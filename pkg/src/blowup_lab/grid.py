"""Uniform 1-D grid on a truncated half-line and the calculus primitives
(trapezoid quadrature, cumulative antiderivative, finite-difference
derivatives) used by every other module."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Grid",
    "Field",
    "build_grid",
    "integrate",
    "integrate_between",
    "cumulative_integral",
    "first_derivative",
    "second_derivative",
]


@dataclass(frozen=True)
class Grid:
    """Uniform nodes 0 = y_0 < y_1 < ... < y_N = y_max."""

    y_max: float
    n_cells: int
    nodes: np.ndarray

    @property
    def h(self) -> float:
        return self.y_max / self.n_cells

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 1


@dataclass
class Field:
    """Scalar samples on a grid, one value per node."""

    grid: Grid
    values: np.ndarray
    diverged: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_nodes,):
            raise ValueError(
                f"field has {self.values.shape} values for a grid with "
                f"{self.grid.n_nodes} nodes"
            )
        if not self.diverged and not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite field values without the diverged flag")

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy(), self.diverged)


def build_grid(y_max: float, n_cells: int) -> Grid:
    """Build a uniform grid on [0, y_max] with n_cells cells (>= 8)."""
    y_max = float(y_max)
    n_cells = int(n_cells)
    if not np.isfinite(y_max) or y_max <= 0.0:
        raise ValueError("y_max must be positive and finite")
    if n_cells < 8:
        raise ValueError("n_cells must be at least 8")
    nodes = np.linspace(0.0, y_max, n_cells + 1)
    return Grid(y_max=y_max, n_cells=n_cells, nodes=nodes)


def _require_finite(f: Field):
    if f.diverged:
        raise ValueError("operation on a diverged field")


def cumulative_integral(f: Field) -> Field:
    """Discrete antiderivative from the wall: trapezoid cumulative sum,
    result[0] = 0."""
    _require_finite(f)
    h = f.grid.h
    v = f.values
    out = np.empty_like(v)
    out[0] = 0.0
    np.cumsum(0.5 * h * (v[1:] + v[:-1]), out=out[1:])
    return Field(f.grid, out)


def integrate(f: Field) -> float:
    """Composite trapezoid rule over the whole grid.

    Uses the same summation as cumulative_integral, so the two agree
    bit-for-bit at the last node.
    """
    return float(cumulative_integral(f).values[-1])


def integrate_between(f: Field, y_lo: float, y_hi: float) -> float:
    """Trapezoid integral of f over [y_lo, y_hi] within the grid, with
    linear interpolation for partial cells at the interval ends."""
    _require_finite(f)
    g = f.grid
    y_lo = max(0.0, float(y_lo))
    y_hi = min(g.y_max, float(y_hi))
    if y_hi <= y_lo:
        return 0.0
    h = g.h
    v = f.values
    i_lo = int(np.ceil(y_lo / h - 1e-12))
    i_hi = int(np.floor(y_hi / h + 1e-12))
    total = 0.0
    if i_lo < i_hi:
        seg = v[i_lo : i_hi + 1]
        total += h * (np.sum(seg) - 0.5 * (seg[0] + seg[-1]))
    if i_lo > i_hi:
        # both endpoints inside one cell
        fa = np.interp(y_lo, g.nodes, v)
        fb = np.interp(y_hi, g.nodes, v)
        return float(0.5 * (fa + fb) * (y_hi - y_lo))
    ya = g.nodes[i_lo]
    if y_lo < ya:
        fa = np.interp(y_lo, g.nodes, v)
        total += 0.5 * (fa + v[i_lo]) * (ya - y_lo)
    yb = g.nodes[i_hi]
    if y_hi > yb:
        fb = np.interp(y_hi, g.nodes, v)
        total += 0.5 * (v[i_hi] + fb) * (y_hi - yb)
    return float(total)


def first_derivative(f: Field) -> Field:
    """Second-order first derivative: central in the interior, one-sided
    three-point stencils at the two endpoints."""
    _require_finite(f)
    if f.grid.n_cells < 2:
        raise ValueError("first_derivative needs at least 2 cells")
    h = f.grid.h
    v = f.values
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
    out[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
    return Field(f.grid, out)


def second_derivative(f: Field) -> Field:
    """Second-order second derivative: three-point stencil in the interior,
    one-sided four-point stencils at the endpoints."""
    _require_finite(f)
    if f.grid.n_cells < 3:
        raise ValueError("second_derivative needs at least 3 cells")
    h2 = f.grid.h ** 2
    v = f.values
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / h2
    out[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h2
    out[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / h2
    return Field(f.grid, out)
