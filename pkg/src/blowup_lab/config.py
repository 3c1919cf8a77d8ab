"""Flat key/value configuration files, scenario orchestration and result
emission.

Config grammar: UTF-8 text, one `key = value` per line, dotted section
prefixes (`solver.dt_init = 1e-4`), `#` comments, decimal reals.
Time-dependent inputs are closed-form families `zero`, `constant(c)`,
`linear(a,b)` (meaning a + b t); initial fields are `zero`,
`gaussian_bump(amp, center, width)` (odd-reflected so it vanishes at the
wall), `scaled_erf(amp)` or `nodes(v0, v1, ...)`.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .grid import Field, Grid, build_grid
from .lift import LiftParams, erf, verify_lift_properties
from .lyapunov import (LyapunovConstants, compare_trajectory, inequality_audit,
                       lower_bound, predict_blowup_time, threshold_g0)
from .solver import ScenarioConfig, Trace, run, sign_audits
from .weight import (WeightSpec, build_weight, search_parameters,
                     validate_constraints, SearchFailure)

__all__ = [
    "ConfigError",
    "ParsedConfig",
    "RunManifest",
    "parse_config",
    "parse_config_text",
    "canonical_text",
    "config_digest",
    "run_scenario",
    "write_trace_csv",
    "read_trace_csv",
    "write_audit_csv",
]

TRACE_COLUMNS = ("t", "dt", "w_inf", "s_max", "a_min", "energy", "G")
AUDIT_COLUMNS = ("t", "G", "dGdt", "rhs", "slack",
                 "R1", "R2", "R3", "R4", "R5", "R6", "pass")

_KNOWN_KEYS = {
    "scenario.name",
    "grid.y_max", "grid.n_cells",
    "weight.n", "weight.m",
    "scenario.p_bar", "scenario.u_bar_e", "scenario.s_wall",
    "scenario.s_far", "scenario.w0", "scenario.s0",
    "solver.horizon", "solver.dt_init", "solver.dt_min",
    "solver.blowup_cap", "solver.snapshot_stride",
    "audit.c_audit",
    "output.trace_csv", "output.audit_csv", "output.summary",
}

_DEFAULTS = {
    "scenario.name": "scenario",
    "grid.y_max": "40",
    "grid.n_cells": "4000",
    "weight.n": "2",
    "weight.m": "16",
    "scenario.p_bar": "zero",
    "scenario.u_bar_e": "zero",
    "scenario.s_wall": "zero",
    "scenario.s_far": "zero",
    "scenario.w0": "zero",
    "scenario.s0": "zero",
    "solver.horizon": "1",
    "solver.dt_init": "1e-3",
    "solver.dt_min": "1e-12",
    "solver.blowup_cap": "1e6",
    "solver.snapshot_stride": "10",
    "audit.c_audit": "10",
    "output.trace_csv": "trace.csv",
    "output.audit_csv": "audit.csv",
    "output.summary": "summary.txt",
}


class ConfigError(ValueError):
    """Raised for malformed or inadmissible configuration input."""


@dataclass
class ParsedConfig:
    name: str
    grid: Grid
    weight: WeightSpec
    lift: LiftParams
    scenario: ScenarioConfig
    constants: LyapunovConstants
    c_audit: float
    trace_csv: str
    audit_csv: str
    summary: str
    canonical: str
    digest: str


@dataclass
class RunManifest:
    scenario_name: str
    config_digest: str
    outputs: list = field(default_factory=list)
    outcome_summary: str = ""
    exit_code: int = 1


def _parse_family(text: str, key: str):
    """Parse `name` or `name(arg, ...)` into (name, [float args])."""
    text = text.strip()
    if "(" not in text:
        return text, []
    if not text.endswith(")"):
        raise ConfigError(f"{key}: malformed family expression {text!r}")
    name, _, inner = text.partition("(")
    try:
        args = [float(a) for a in inner[:-1].split(",")] if inner[:-1].strip() else []
    except ValueError as exc:
        raise ConfigError(f"{key}: non-numeric family argument in {text!r}") from exc
    return name.strip(), args


def _time_family(text: str, key: str) -> Callable[[float], float]:
    name, args = _parse_family(text, key)
    if name == "zero":
        return lambda t: 0.0
    if name == "constant":
        if len(args) != 1:
            raise ConfigError(f"{key}: constant(c) takes one argument")
        c = args[0]
        return lambda t: c
    if name == "linear":
        if len(args) != 2:
            raise ConfigError(f"{key}: linear(a,b) takes two arguments")
        a, b = args
        return lambda t: a + b * t
    raise ConfigError(f"{key}: unknown time family {name!r}")


def _field_family(text: str, key: str, grid: Grid) -> Field:
    name, args = _parse_family(text, key)
    y = grid.nodes
    if name == "zero":
        return Field(grid, np.zeros_like(y))
    if name == "gaussian_bump":
        if len(args) != 3:
            raise ConfigError(f"{key}: gaussian_bump(amp, center, width) "
                              "takes three arguments")
        amp, center, width = args
        if width <= 0.0:
            raise ConfigError(f"{key}: gaussian_bump width must be positive")
        vals = amp * (np.exp(-(((y - center) / width) ** 2))
                      - np.exp(-(((y + center) / width) ** 2)))
        return Field(grid, vals)
    if name == "scaled_erf":
        if len(args) != 1:
            raise ConfigError(f"{key}: scaled_erf(amp) takes one argument")
        return Field(grid, args[0] * erf(0.5 * y))
    if name == "nodes":
        if len(args) != grid.n_nodes:
            raise ConfigError(
                f"{key}: nodes(...) needs {grid.n_nodes} values, got {len(args)}")
        return Field(grid, np.asarray(args))
    raise ConfigError(f"{key}: unknown field family {name!r}")


def _float(entries, key):
    try:
        return float(entries[key])
    except ValueError as exc:
        raise ConfigError(f"{key}: not a number: {entries[key]!r}") from exc


def parse_config_text(text: str) -> ParsedConfig:
    entries = dict(_DEFAULTS)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if not value:
            raise ConfigError(f"line {lineno}: empty value for {key!r}")
        entries[key] = value

    try:
        grid = build_grid(_float(entries, "grid.y_max"),
                          int(_float(entries, "grid.n_cells")))
        weight = build_weight(_float(entries, "weight.n"),
                              _float(entries, "weight.m"))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    horizon = _float(entries, "solver.horizon")
    if horizon <= 0.0:
        raise ConfigError("solver.horizon must be positive")
    p_bar = _time_family(entries["scenario.p_bar"], "scenario.p_bar")
    u_bar_e = _time_family(entries["scenario.u_bar_e"], "scenario.u_bar_e")
    s_wall = _time_family(entries["scenario.s_wall"], "scenario.s_wall")
    s_far = _time_family(entries["scenario.s_far"], "scenario.s_far")

    t_samples = np.linspace(0.0, horizon, 2049)
    for key, fn in (("scenario.s_wall", s_wall), ("scenario.s_far", s_far)):
        if max(fn(t) for t in t_samples) > 1e-12:
            raise ConfigError(
                f"{key} must be nonpositive over the horizon "
                "(sign admissibility of the temperature gradients)")

    # far-field constants of the lift from the scenario families
    c_e = -min(min(u_bar_e(t) for t in t_samples), 0.0)
    c_p = max(max(p_bar(t) for t in t_samples), 0.0)
    lift = LiftParams(c_e, c_p)

    scenario = ScenarioConfig(
        grid=grid, p_bar=p_bar, u_bar_e=u_bar_e, s_wall=s_wall, s_far=s_far,
        w0=_field_family(entries["scenario.w0"], "scenario.w0", grid),
        s0=_field_family(entries["scenario.s0"], "scenario.s0", grid),
        horizon=horizon,
        dt_init=_float(entries, "solver.dt_init"),
        dt_min=_float(entries, "solver.dt_min"),
        blowup_cap=_float(entries, "solver.blowup_cap"),
        snapshot_stride=int(_float(entries, "solver.snapshot_stride")),
    )
    constants = LyapunovConstants.from_weight(weight, lift)
    canonical = canonical_text(entries)
    return ParsedConfig(
        name=entries["scenario.name"], grid=grid, weight=weight, lift=lift,
        scenario=scenario, constants=constants,
        c_audit=_float(entries, "audit.c_audit"),
        trace_csv=entries["output.trace_csv"],
        audit_csv=entries["output.audit_csv"],
        summary=entries["output.summary"],
        canonical=canonical, digest=config_digest(canonical),
    )


def parse_config(path) -> ParsedConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)


def canonical_text(entries: dict) -> str:
    """Normalized config serialization: sorted `key = value` lines."""
    full = dict(_DEFAULTS)
    full.update(entries)
    return "".join(f"{k} = {full[k]}\n" for k in sorted(full))


def config_digest(canonical: str) -> str:
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_trace_csv(path, trace: Trace):
    lines = [",".join(TRACE_COLUMNS)]
    for i, t in enumerate(trace.times):
        row = (t, trace.dts[i], trace.series["w_inf"][i],
               trace.series["s_max"][i], trace.series["a_min"][i],
               trace.series["energy"][i], trace.series["G"][i])
        lines.append(",".join(_fmt(x) for x in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_trace_csv(path, grid: Grid, blowup_cap: float = 1e6,
                   dt_min: float = 1e-12) -> Trace:
    """Rebuild a Trace (series only, no snapshots) from a stored CSV; the
    outcome is inferred from the final sup norm and step size."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].split(",") != list(TRACE_COLUMNS):
        raise ConfigError(f"{path}: not a trace CSV (bad header)")
    trace = Trace(grid=grid)
    for ln in lines[1:]:
        vals = [float(x) for x in ln.split(",")]
        row = dict(zip(TRACE_COLUMNS, vals))
        trace.times.append(row["t"])
        trace.dts.append(row["dt"])
        for key in ("w_inf", "s_max", "a_min", "energy", "G"):
            trace.series.setdefault(key, []).append(row[key])
    if trace.series["w_inf"] and trace.series["w_inf"][-1] >= blowup_cap:
        trace.outcome = "blowup_detected"
        trace.event_time = trace.times[-1]
    elif trace.dts and 0.0 < trace.dts[-1] < dt_min:
        trace.outcome = "step_underflow"
        trace.event_time = trace.times[-1]
    return trace


def write_audit_csv(path, audit, trace: Trace):
    """Emit the per-step inequality audit; the six quadrature terms are
    filled at snapshot times and nan elsewhere."""
    terms_by_t = {s.t: s.r_terms for s in audit.snapshot_terms}
    lines = [",".join(AUDIT_COLUMNS)]
    for step_rec in audit.steps:
        r = terms_by_t.get(step_rec.t, (float("nan"),) * 6)
        row = (step_rec.t, step_rec.g, step_rec.dg_dt, step_rec.rhs,
               step_rec.slack, *r, 1.0 if step_rec.passed else 0.0)
        lines.append(",".join(_fmt(x) for x in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def run_scenario(config: ParsedConfig) -> RunManifest:
    """Full pipeline: weight and lift certification, solver run, sign and
    Lyapunov audits, blowup prediction, and file emission.

    Exit code 0: completed with all audits passing; 2: blowup detected
    with all audits passing (the predicted success mode); 1: any audit
    failure.
    """
    manifest = RunManifest(scenario_name=config.name,
                           config_digest=config.digest)
    summary: list[tuple[str, str]] = [
        ("scenario", config.name), ("digest", config.digest)]

    weight_report = validate_constraints(config.weight)
    summary.append(("weight_constraints",
                    "pass" if weight_report.overall else "fail"))
    times = [t for t in (0.1, 0.5 * config.scenario.horizon,
                         config.scenario.horizon) if t > 0.0]
    lift_report = verify_lift_properties(config.lift, config.grid, times)
    summary.append(("lift_properties",
                    "pass" if lift_report.overall else "fail"))

    trace = run(config.scenario, config.lift, config.weight)
    summary.append(("outcome", trace.outcome))
    if trace.event_time is not None:
        summary.append(("event_time", _fmt(trace.event_time)))

    signs = sign_audits(trace, config.lift)
    summary.append(("sign_audits", "pass" if signs.overall else "fail"))
    # informational: exponential energy bounds only hold for the linear
    # axis-restricted model, so the full run reports the peak energy
    summary.append(("energy_max", _fmt(max(trace.series["energy"]))))

    g0 = trace.series["G"][0]
    summary.append(("g0", _fmt(g0)))
    thr = threshold_g0(config.scenario.horizon, config.constants)
    summary.append(("threshold_g0", _fmt(thr)))
    ineq = inequality_audit(trace, config.weight, config.constants,
                            c_audit=config.c_audit)
    summary.append(("inequality_audit", "pass" if ineq.overall else "fail"))
    audits_ok = (weight_report.overall and lift_report.overall
                 and signs.overall and ineq.overall)
    if g0 > 0.0:
        t_star = predict_blowup_time(g0, config.constants,
                                     config.scenario.horizon)
        summary.append(("predicted_t_star",
                        _fmt(t_star) if t_star is not None
                        else "none_within_horizon"))
        cmp_report = compare_trajectory(trace, g0, config.constants,
                                        c_audit=config.c_audit)
        summary.append(("comparison_audit",
                        "pass" if cmp_report.overall else "fail"))
        audits_ok = audits_ok and cmp_report.overall

    write_trace_csv(config.trace_csv, trace)
    write_audit_csv(config.audit_csv, ineq, trace)
    manifest.outputs = [config.trace_csv, config.audit_csv, config.summary]

    if not audits_ok or trace.outcome == "step_underflow":
        manifest.exit_code = 1
    elif trace.outcome == "blowup_detected":
        manifest.exit_code = 2
    else:
        manifest.exit_code = 0
    summary.append(("exit_code", str(manifest.exit_code)))
    manifest.outcome_summary = "\n".join(f"{k}: {v}" for k, v in summary) + "\n"
    Path(config.summary).write_text(manifest.outcome_summary, encoding="utf-8")
    return manifest
