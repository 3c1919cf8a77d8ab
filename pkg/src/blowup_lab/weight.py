"""Piecewise weight family and its constraint certification.

The weight is linear on [0, 1/2), cubic on [1/2, 1) and [1, 2), and a
power-law tail m^n / (y + m - 2)^n on [2, inf).  For tail exponent n > 1
and offset m large enough it satisfies the nine structural constraints
that make the Lyapunov-functional inequality chain close; this module
builds the family, derives the attached constants (gamma, sigma, mu,
lambda, eta, L1 norm) and certifies the constraints by dense sampling
plus exact breakpoint evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "WeightSpec",
    "ConstraintRecord",
    "ConstraintReport",
    "SearchFailure",
    "build_weight",
    "eval_weight",
    "eval_weight_arrays",
    "validate_constraints",
    "derive_mu_lambda",
    "choose_eta",
    "weight_l1_norm",
    "tail_integral_from",
    "search_parameters",
]

ALPHA = 0.5
BETA = 1.0
DELTA = 2.0
_MARGIN = 1e-6


@dataclass(frozen=True)
class WeightSpec:
    """Weight family member with all derived constants."""

    n: float
    m: float
    a_coef: float
    b_coef: float
    d_coef: float
    e_coef: float
    f_coef: float
    alpha: float
    beta: float
    gamma: float
    delta: float
    sigma: float
    mu: float
    lam: float
    c_y: float


@dataclass
class ConstraintRecord:
    id: int
    description: str
    satisfied: bool
    worst_margin: float
    worst_location: float


@dataclass
class ConstraintReport:
    records: list[ConstraintRecord] = field(default_factory=list)

    @property
    def overall(self) -> bool:
        return all(r.satisfied for r in self.records)

    def __str__(self) -> str:
        lines = []
        for r in self.records:
            verdict = "pass" if r.satisfied else "FAIL"
            lines.append(
                f"({r.id}) {r.description}: {verdict} "
                f"(worst margin {r.worst_margin:.3e} at y={r.worst_location:.6g})"
            )
        lines.append(f"overall: {'pass' if self.overall else 'FAIL'}")
        return "\n".join(lines)


@dataclass
class SearchFailure:
    """Returned by search_parameters when no candidate passes."""

    message: str
    last_reports: dict  # n -> (m, ConstraintReport)


def _coefficients(n: float, m: float):
    a = 1.0 + 2.0 * n / (3.0 * m) + n * (n + 1.0) / (6.0 * m * m)
    b = n / (3.0 * m) + n * (n + 1.0) / (3.0 * m * m)
    d = -2.0 * n / m - 1.5 * n * (n + 1.0) / (m * m)
    e = 3.0 * n / m + 2.0 * n * (n + 1.0) / (m * m)
    f = 1.0 - 2.0 * n / (3.0 * m) - 2.0 * n * (n + 1.0) / (3.0 * m * m)
    return a, b, d, e, f


def eval_weight_arrays(w: WeightSpec, y) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(value, first, second derivative) of the weight on an array of y >= 0.

    At breakpoints the right-hand piece is used.
    """
    y = np.asarray(y, dtype=float)
    if np.any(y < 0.0):
        raise ValueError("weight is defined on y >= 0")
    val = np.empty_like(y)
    d1 = np.empty_like(y)
    d2 = np.empty_like(y)

    p1 = y < ALPHA
    p2 = (y >= ALPHA) & (y < BETA)
    p3 = (y >= BETA) & (y < DELTA)
    p4 = y >= DELTA

    a, b, d, e, f = w.a_coef, w.b_coef, w.d_coef, w.e_coef, w.f_coef

    yy = y[p1]
    val[p1] = 1.2 * a * yy
    d1[p1] = 1.2 * a
    d2[p1] = 0.0

    yy = y[p2]
    val[p2] = -1.6 * a * yy**3 + 2.4 * a * yy**2 + 0.2 * a
    d1[p2] = -4.8 * a * yy**2 + 4.8 * a * yy
    d2[p2] = -9.6 * a * yy + 4.8 * a

    yy = y[p3]
    val[p3] = b * yy**3 + d * yy**2 + e * yy + f
    d1[p3] = 3.0 * b * yy**2 + 2.0 * d * yy + e
    d2[p3] = 6.0 * b * yy + 2.0 * d

    s = y[p4] + w.m - 2.0
    mn = w.m**w.n
    val[p4] = mn * s ** (-w.n)
    d1[p4] = -w.n * mn * s ** (-w.n - 1.0)
    d2[p4] = w.n * (w.n + 1.0) * mn * s ** (-w.n - 2.0)
    return val, d1, d2


def eval_weight(w: WeightSpec, y: float) -> tuple[float, float, float]:
    """Weight value and its two derivatives at a single point y >= 0."""
    v, d1, d2 = eval_weight_arrays(w, np.atleast_1d(float(y)))
    return float(v[0]), float(d1[0]), float(d2[0])


def weight_l1_norm(n: float, m: float) -> float:
    """Exact L1 norm: closed-form piecewise polynomial integrals on [0, 2]
    plus the tail integral m / (n - 1)."""
    if n <= 1.0:
        raise ValueError("tail exponent n must exceed 1 for an integrable tail")
    a, b, d, e, f = _coefficients(n, m)
    # linear piece on [0, 1/2): integral is (3/20) a
    part1 = 0.6 * a * 0.25
    # cubic piece on [1/2, 1)
    def cubic1(y):
        return -0.4 * a * y**4 + 0.8 * a * y**3 + 0.2 * a * y

    part2 = cubic1(1.0) - cubic1(0.5)
    # cubic piece on [1, 2)
    def cubic2(y):
        return 0.25 * b * y**4 + d * y**3 / 3.0 + 0.5 * e * y**2 + f * y

    part3 = cubic2(2.0) - cubic2(1.0)
    tail = m / (n - 1.0)
    return part1 + part2 + part3 + tail


def tail_integral_from(w: WeightSpec, y0: float) -> float:
    """Closed-form integral of the tail piece over [y0, inf) for y0 >= 2."""
    if y0 < DELTA:
        raise ValueError("tail integral only defined from y0 >= 2")
    s = y0 + w.m - 2.0
    return w.m**w.n * s ** (1.0 - w.n) / (w.n - 1.0)


def derive_mu_lambda(n: float, m: float, samples: int = 4096) -> tuple[float, float]:
    """Safety-margined sampled suprema of the two constraint ratios:

      mu  = (1 + margin) * sup_{(0, beta)} y w'/w
      lam = (1 + margin) * sup_{(alpha, gamma)} max(0, -w''/w)
    """
    spec = _bare_spec(n, m)
    eps = 1e-9
    y1 = np.linspace(eps, BETA - eps, samples)
    v, d1, _ = eval_weight_arrays(spec, y1)
    if np.any(v <= 0.0):
        raise ValueError("weight vanishes inside (0, beta); ratio undefined")
    mu = float(np.max(y1 * d1 / v))
    # limit at y -> 0+ on the linear piece is exactly 1
    mu = max(mu, 1.0)
    y2 = np.linspace(ALPHA, spec.gamma, samples)
    v, _, d2 = eval_weight_arrays(spec, y2)
    if np.any(v <= 0.0):
        raise ValueError("weight vanishes inside (alpha, gamma); ratio undefined")
    lam = float(max(0.0, np.max(-d2 / v)))
    # the supremum is attained as a left limit at beta, where the lattice
    # evaluates the right piece; add the analytic left-limit candidate
    v_beta, _ = _eval_piece(spec, 1, BETA)
    d2_beta = -9.6 * spec.a_coef * BETA + 4.8 * spec.a_coef
    lam = max(lam, -d2_beta / v_beta)
    return (1.0 + _MARGIN) * mu, (1.0 + _MARGIN) * lam


def choose_eta(sigma: float) -> float:
    """Near-maximal admissible eta: just below min(2, 1/sigma), so that
    1 < eta < 2 and eta * sigma < 1."""
    if not 0.0 < sigma < 1.0:
        raise ValueError("sigma must lie in (0, 1)")
    return (1.0 - 1e-9) * min(2.0, 1.0 / sigma)


def _bare_spec(n: float, m: float) -> WeightSpec:
    a, b, d, e, f = _coefficients(n, m)
    gamma = (4.0 * n * m + 3.0 * n * (n + 1.0)) / (2.0 * n * m + 2.0 * n * (n + 1.0))
    sigma = n / (n + 1.0)
    return WeightSpec(
        n=n, m=m, a_coef=a, b_coef=b, d_coef=d, e_coef=e, f_coef=f,
        alpha=ALPHA, beta=BETA, gamma=gamma, delta=DELTA,
        sigma=sigma, mu=float("nan"), lam=float("nan"), c_y=float("nan"),
    )


def build_weight(n: float, m: float) -> WeightSpec:
    """Construct the family member for tail exponent n > 1 and offset m > 0,
    with all derived constants filled in."""
    n = float(n)
    m = float(m)
    if n <= 1.0:
        raise ValueError("tail exponent n must exceed 1 for an integrable tail")
    if m <= 0.0:
        raise ValueError("tail offset m must be positive")
    spec = _bare_spec(n, m)
    mu, lam = derive_mu_lambda(n, m)
    c_y = weight_l1_norm(n, m)
    return WeightSpec(
        n=n, m=m,
        a_coef=spec.a_coef, b_coef=spec.b_coef, d_coef=spec.d_coef,
        e_coef=spec.e_coef, f_coef=spec.f_coef,
        alpha=spec.alpha, beta=spec.beta, gamma=spec.gamma, delta=spec.delta,
        sigma=spec.sigma, mu=mu, lam=lam, c_y=c_y,
    )


def _piece_samples(w: WeightSpec, samples_per_piece: int) -> np.ndarray:
    tail_end = DELTA + 3.0 * w.m + 20.0
    pieces = [
        np.linspace(0.0, ALPHA, samples_per_piece),
        np.linspace(ALPHA, BETA, samples_per_piece),
        np.linspace(BETA, DELTA, samples_per_piece),
        np.linspace(DELTA, tail_end, samples_per_piece),
    ]
    ys = np.unique(np.concatenate(pieces + [[w.gamma]]))
    return ys


def validate_constraints(w: WeightSpec, samples_per_piece: int = 256) -> ConstraintReport:
    """Certify the nine structural constraints on dense samples plus all
    breakpoints, and the continuity of the weight and its slope at the
    three interior breakpoints."""
    if samples_per_piece < 64:
        raise ValueError("samples_per_piece must be at least 64")
    report = ConstraintReport()
    ys = _piece_samples(w, samples_per_piece)
    val, d1, d2 = eval_weight_arrays(w, ys)
    tol = 1e-12

    def add(cid, desc, margins, locs):
        margins = np.atleast_1d(np.asarray(margins, dtype=float))
        locs = np.atleast_1d(np.asarray(locs, dtype=float))
        i = int(np.argmin(margins))
        report.records.append(
            ConstraintRecord(
                id=cid, description=desc,
                satisfied=bool(margins[i] >= -tol),
                worst_margin=float(margins[i]),
                worst_location=float(locs[i]),
            )
        )

    # (1) nonnegative and integrable
    add(1, "weight >= 0 with finite L1 norm",
        np.concatenate([val, [np.inf if w.n > 1.0 else -1.0]]),
        np.concatenate([ys, [ys[-1]]]))
    # (2) boundary and critical values
    v0, d10, _ = eval_weight(w, 0.0)
    _, d1b, _ = eval_weight(w, BETA)
    # the power-law tail and its slope vanish at infinity iff n > 0
    add(2, "vanishing at 0 and infinity; stationary slope at beta",
        [-abs(v0), -abs(d1b), w.n], [0.0, BETA, ys[-1]])
    # (3) concave on (alpha, gamma)
    mask = (ys > ALPHA) & (ys < w.gamma)
    add(3, "concave between alpha and gamma", -d2[mask], ys[mask])
    # (4) convex outside
    mask = (ys <= ALPHA) | (ys >= w.gamma)
    add(4, "convex on [0, alpha] and [gamma, inf)", d2[mask], ys[mask])
    # (5) slope combination at 0, delta, gamma
    _, d1d, _ = eval_weight(w, DELTA)
    _, d1g, _ = eval_weight(w, w.gamma)
    add(5, "slope combination 0.5 w'(0) + w'(delta) + 2 w'(gamma) >= 0",
        [0.5 * d10 + d1d + 2.0 * d1g], [w.gamma])
    # (6) infimum combination on [alpha, delta]
    mask = (ys >= ALPHA) & (ys <= DELTA)
    inf_val = float(np.min(val[mask]))
    add(6, "inf weight on [alpha, delta] balances the negative slopes",
        [inf_val / (DELTA - ALPHA) + d1d + 2.0 * d1g], [w.gamma])
    # (7) y w' <= mu w on (0, beta)
    mask = (ys > 0.0) & (ys < BETA)
    add(7, "y w' <= mu w on (0, beta)",
        w.mu * val[mask] - ys[mask] * d1[mask], ys[mask])
    # (8) w'' >= -lambda w on (alpha, gamma)
    mask = (ys > ALPHA) & (ys < w.gamma)
    add(8, "w'' >= -lambda w on (alpha, gamma)",
        d2[mask] + w.lam * val[mask], ys[mask])
    # (9) w'^2 / (w w'') <= sigma < 1 on [delta, inf)
    mask = ys >= DELTA
    denom = val[mask] * d2[mask]
    if np.any(np.abs(denom) < 1e-300):
        add(9, "slope-to-curvature ratio bounded by sigma on the tail",
            [-1.0], [float(ys[mask][np.argmin(np.abs(denom))])])
    else:
        ratio = d1[mask] ** 2 / denom
        add(9, "slope-to-curvature ratio bounded by sigma on the tail",
            np.concatenate([w.sigma - ratio, [1.0 - w.sigma]]),
            np.concatenate([ys[mask], [ys[mask][-1]]]))
    # continuity at breakpoints (reported as record 10): exact left-piece
    # evaluation at the breakpoint against the right-hand piece
    margins = []
    for y_b, left in ((ALPHA, 0), (BETA, 1), (DELTA, 2)):
        v_l, d1_l = _eval_piece(w, left, y_b)
        v_r, d1_r, _ = eval_weight(w, y_b)
        scale = 1.0 + abs(v_r) + abs(d1_r)
        jump = max(abs(v_r - v_l), abs(d1_r - d1_l)) / scale
        margins.append(1e-10 - jump)
    add(10, "continuity of weight and slope at 1/2, 1, 2",
        margins, [ALPHA, BETA, DELTA])
    return report


def _eval_piece(w: WeightSpec, piece: int, y: float) -> tuple[float, float]:
    """Evaluate one specific piece (0-3) and its slope at y, ignoring the
    piece boundaries; used for exact breakpoint continuity checks."""
    a = w.a_coef
    if piece == 0:
        return 1.2 * a * y, 1.2 * a
    if piece == 1:
        return (-1.6 * a * y**3 + 2.4 * a * y**2 + 0.2 * a,
                -4.8 * a * y**2 + 4.8 * a * y)
    if piece == 2:
        b, d, e, f = w.b_coef, w.d_coef, w.e_coef, w.f_coef
        return (b * y**3 + d * y**2 + e * y + f,
                3.0 * b * y**2 + 2.0 * d * y + e)
    s = y + w.m - 2.0
    mn = w.m**w.n
    return mn * s ** (-w.n), -w.n * mn * s ** (-w.n - 1.0)


def search_parameters(
    n_candidates, m_start: float, m_factor: float, m_max: float,
    samples_per_piece: int = 256,
):
    """Geometric sweep over the tail offset for each candidate exponent;
    returns the first fully validated spec (smallest n, then smallest m),
    or a SearchFailure carrying the last report per candidate."""
    n_candidates = [float(n) for n in n_candidates]
    if not n_candidates:
        raise ValueError("need at least one candidate tail exponent")
    if any(n <= 1.0 for n in n_candidates):
        raise ValueError("all tail exponents must exceed 1")
    if m_factor <= 1.0:
        raise ValueError("m_factor must exceed 1")
    last_reports = {}
    for n in sorted(n_candidates):
        m = float(m_start)
        while m <= m_max:
            spec = build_weight(n, m)
            report = validate_constraints(spec, samples_per_piece)
            last_reports[n] = (m, report)
            if report.overall:
                return spec
            m *= m_factor
    return SearchFailure(
        message="no (n, m) candidate satisfied all constraints",
        last_reports=last_reports,
    )
