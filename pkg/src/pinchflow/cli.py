"""Command line front end: configured scenario runs, deterministic artifact
emission, and re-verification of emitted artifacts.

Configuration is a flat text file of ``key = value`` lines (full-line ``#``
comments allowed).  Every key has a scenario-dependent default; unknown keys
are rejected with their line number.  Values from the environment
(``PINCHFLOW_<KEY>``) override the file, and command line flags override
both.

Subcommands:

``run``            build the configured scenario, integrate it, run its
                   check battery, and write artifacts into the output
                   directory.
``verify``         re-read previously written artifacts and re-run every
                   check that can be evaluated from them.
``compare``        like ``run`` but restricted to the two-law comparison
                   scenarios.
``print-defaults`` print the resolved default configuration of a scenario
                   (or of all scenarios) as parseable ``key = value`` lines.

Exit codes: 0 all checks pass, 1 at least one check margin violated,
2 usage or configuration error, 3 numerical failure (the integrator stopped
on a step underflow or marker crossing before the scenario reached its
milestone).

Artifacts (all newline terminated, locale independent, no timestamps, byte
identical across repeated runs and thread counts):

``series.csv``     one header line, then one comma separated row per stored
                   snapshot with the columns of SERIES_COLUMNS, each value
                   printed with 17 significant digits.
``snapshots.tsv``  per snapshot: one JSON header line (t, law parameters,
                   tracked corner indices, marker count) followed by one
                   ``position<TAB>value`` line per marker; floats round
                   trip exactly.
``report.txt``     one line per checked inequality: name, t, value, bound,
                   margin, PASS or FAIL.
``summary.json``   single machine readable document: termination tag, fit
                   results, and each check's verdict and worst margin.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, fields as dc_fields
from pathlib import Path

import numpy as np

from .diagnostics import (DOUBLE_EXPONENTIAL, EXPONENTIAL, SERIES_COLUMNS,
                          CheckLine,
                          CheckReport, DiagRecord, FitResult, fit_growth,
                          growth_discrimination, hyperbolic_approx_compare,
                          invariant_suite, lemma_bounds_check, patch_bounds,
                          support_bound_check, ux_bound_check, ux_calibration,
                          record)
from .errors import (ConfigError, ContractError, FitError, HypothesisError,
                     PinchflowError)
from .evolve import (BLOWUP_X1, MARKER_CROSSING, STEP_UNDERFLOW, StepControl,
                     Trajectory, run)
from .fields import MarkerField
from .kernels import (ALPHA_PATCH, BOUNDARY_LAYER, EULER_LOG,
                      HYPERBOLIC_APPROX, LAW_KINDS, LOCAL, ODD_EULER,
                      VelocityLaw)
from .profiles import (ProfileSpec, build_comparison_profile,
                       build_euler_profile, build_patch_profile,
                       build_plateau_profile, euler_default_spec,
                       patch_default_spec, pinch_strength_constant,
                       pinch_time_bound)

__all__ = [
    "RunConfig",
    "parse_config",
    "scenario_defaults",
    "format_defaults",
    "write_series",
    "read_series",
    "write_snapshots",
    "read_snapshots",
    "main",
    "console_main",
    "ENV_PREFIX",
    "SCENARIOS",
    "EMIT_KINDS",
]

ENV_PREFIX = "PINCHFLOW_"

EULER_GROWTH = "euler_growth"
PATCH_BLOWUP = "patch_blowup"
LOCAL_COMPARISON = "local_comparison"
HYPERBOLIC_SCENARIO = "hyperbolic_approx"
CUSTOM = "custom"
SCENARIOS = (EULER_GROWTH, PATCH_BLOWUP, LOCAL_COMPARISON,
             HYPERBOLIC_SCENARIO, CUSTOM)

EMIT_KINDS = ("series", "snapshots", "report")

# Positive but smaller than any reachable corner position: leaves the
# pinch-detection test in place while never triggering it.
EPS_PINCH_DISABLED = 1e-308

_FLOAT_KEYS = ("alpha", "a", "x1_0", "x2_0", "M", "support_bound", "grading",
               "dt_init", "cfl", "dt_min", "eps_blowup", "t_end")
_INT_KEYS = ("n_markers", "snapshot_stride")
_STR_KEYS = ("scenario", "law", "ramp_kind", "output_dir")
CONFIG_KEYS = ("scenario", "law", "alpha", "a",
               "x1_0", "x2_0", "M", "support_bound", "ramp_kind",
               "n_markers", "grading",
               "dt_init", "cfl", "dt_min", "eps_blowup", "t_end",
               "snapshot_stride", "output_dir", "emit")


# ----------------------------------------------------------------------
# configuration
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run configuration (scenario defaults already merged)."""

    scenario: str
    law: str
    alpha: float | None
    a: float | None
    x1_0: float
    x2_0: float
    M: float
    support_bound: float
    ramp_kind: str
    n_markers: int
    grading: float
    dt_init: float
    cfl: float
    dt_min: float
    eps_blowup: float
    t_end: float
    snapshot_stride: int
    output_dir: str
    emit: tuple

    def profile_spec(self) -> ProfileSpec:
        return ProfileSpec(x1_0=self.x1_0, x2_0=self.x2_0, M=self.M,
                           support_bound=self.support_bound,
                           ramp_kind=self.ramp_kind,
                           n_markers=self.n_markers, grading=self.grading)

    def step_control(self) -> StepControl:
        return StepControl(dt_init=self.dt_init, cfl=self.cfl,
                           dt_min=self.dt_min, eps_blowup=self.eps_blowup,
                           t_end=self.t_end,
                           snapshot_stride=self.snapshot_stride)

    def velocity_law(self) -> VelocityLaw:
        return _law_from(self.law, self.alpha, self.a)

    def build_profile(self) -> MarkerField:
        spec = self.profile_spec()
        if self.scenario in (EULER_GROWTH, HYPERBOLIC_SCENARIO):
            return build_euler_profile(spec)
        if self.scenario == PATCH_BLOWUP:
            return build_patch_profile(spec)
        if self.scenario == LOCAL_COMPARISON:
            return build_comparison_profile(spec)
        return build_plateau_profile(spec)

    def validate(self) -> None:
        self.step_control()
        self.velocity_law()
        spec = self.profile_spec()
        if self.scenario in (EULER_GROWTH, LOCAL_COMPARISON,
                             HYPERBOLIC_SCENARIO):
            spec.validate_euler()
        elif self.scenario == PATCH_BLOWUP:
            spec.validate_patch()
        else:
            spec.validate_common()
        for kind in self.emit:
            if kind not in EMIT_KINDS:
                raise ConfigError(
                    f"unknown emit kind {kind!r}; expected a subset of "
                    f"{EMIT_KINDS}")

    def as_dict(self) -> dict:
        """Configuration echo for the summary document.  Excludes
        output_dir so summaries stay byte identical across output
        locations."""
        out = {}
        for f in dc_fields(self):
            if f.name == "output_dir":
                continue
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out


def _law_from(kind: str, alpha, a) -> VelocityLaw:
    if kind == EULER_LOG:
        return VelocityLaw.euler_log()
    if kind == ODD_EULER:
        return VelocityLaw.odd_euler()
    if kind == ALPHA_PATCH:
        if alpha is None:
            raise ConfigError("law alpha_patch requires the key alpha")
        return VelocityLaw.alpha_patch(alpha)
    if kind == LOCAL:
        return VelocityLaw.local()
    if kind == HYPERBOLIC_APPROX:
        return VelocityLaw.hyperbolic_approx()
    if kind == BOUNDARY_LAYER:
        if a is None:
            raise ConfigError("law boundary_layer requires the key a")
        return VelocityLaw.boundary_layer(a)
    raise ConfigError(f"unknown law {kind!r}; expected one of {LAW_KINDS}")


def scenario_defaults(scenario: str, alpha=None, a=None) -> dict:
    """Default key/value map of a scenario; alpha and a, when already
    known, feed the derived geometry of the pinch scenario."""
    if scenario not in SCENARIOS:
        raise ConfigError(
            f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")
    base = {
        "scenario": scenario,
        "alpha": alpha,
        "a": a,
        "ramp_kind": "smoothstep_quintic",
        "grading": 2.0,
        "cfl": 0.5,
        "snapshot_stride": 1,
        "output_dir": "out",
        "emit": ("series", "report"),
    }
    if scenario == EULER_GROWTH:
        spec = euler_default_spec()
        base.update(law=EULER_LOG, x1_0=spec.x1_0, x2_0=spec.x2_0, M=spec.M,
                    support_bound=spec.support_bound, n_markers=4096,
                    dt_init=0.05, dt_min=2e-3, eps_blowup=EPS_PINCH_DISABLED,
                    t_end=10.0)
    elif scenario == PATCH_BLOWUP:
        eff_alpha = 0.5 if alpha is None else float(alpha)
        spec = patch_default_spec(eff_alpha)
        base.update(law=ALPHA_PATCH, alpha=eff_alpha, x1_0=spec.x1_0,
                    x2_0=spec.x2_0, M=spec.M,
                    support_bound=spec.support_bound, n_markers=4096,
                    dt_init=0.02, dt_min=1e-5,
                    eps_blowup=spec.x1_0 / 50.0, t_end=3.0)
    elif scenario == LOCAL_COMPARISON:
        base.update(law=EULER_LOG, x1_0=0.05, x2_0=0.45, M=9.0,
                    support_bound=1.0, n_markers=1024,
                    dt_init=0.05, dt_min=2e-3, eps_blowup=EPS_PINCH_DISABLED,
                    t_end=10.0)
    elif scenario == HYPERBOLIC_SCENARIO:
        spec = euler_default_spec()
        base.update(law=ODD_EULER, x1_0=spec.x1_0, x2_0=spec.x2_0, M=spec.M,
                    support_bound=spec.support_bound, n_markers=1024,
                    dt_init=0.05, dt_min=2e-3, eps_blowup=EPS_PINCH_DISABLED,
                    t_end=10.0)
    else:
        base.update(law=EULER_LOG, x1_0=1e-3, x2_0=0.5, M=16.0,
                    support_bound=1.0, n_markers=1024,
                    dt_init=0.05, dt_min=1e-6, eps_blowup=1e-6, t_end=10.0)
    return base


def _coerce(key: str, value, where: str):
    """Convert a raw (usually string) value to the key's type."""
    if key == "emit":
        if isinstance(value, (list, tuple)):
            parts = [str(p) for p in value]
        else:
            parts = [p.strip() for p in str(value).split(",") if p.strip()]
        for p in parts:
            if p not in EMIT_KINDS:
                raise ConfigError(
                    f"{where}: emit entry {p!r} not in {EMIT_KINDS}")
        return tuple(k for k in EMIT_KINDS if k in parts)
    if key in _STR_KEYS:
        s = str(value).strip()
        if len(s) >= 2 and s[0] == s[-1] and s[0] in "'\"":
            s = s[1:-1]
        return s
    if key in _INT_KEYS:
        try:
            if isinstance(value, str):
                return int(value.strip(), 10)
            if float(value) != int(value):
                raise ValueError
            return int(value)
        except (TypeError, ValueError):
            raise ConfigError(
                f"{where}: value for {key} must be an integer; "
                f"got {value!r}") from None
    if key in _FLOAT_KEYS:
        if value is None:
            return None
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(
                f"{where}: value for {key} must be a number; "
                f"got {value!r}") from None
    raise ConfigError(f"{where}: unknown key {key!r}")


def _parse_pairs(text: str) -> dict:
    """Flat ``key = value`` lines to a typed dict; line-accurate errors."""
    pairs = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(
                f"line {lineno}: expected 'key = value'; got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        where = f"line {lineno}"
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{where}: unknown key {key!r}")
        if key in pairs:
            raise ConfigError(f"{where}: duplicate key {key!r}")
        pairs[key] = _coerce(key, value, where)
    return pairs


def resolve_config(pairs: dict) -> RunConfig:
    """Merge typed key/value pairs over their scenario defaults and
    validate the result."""
    pairs = {key: value if value is None
             else _coerce(key, value, f"key {key}")
             for key, value in pairs.items()}
    scenario = pairs.get("scenario")
    if scenario is None:
        raise ConfigError("missing required key: scenario")
    merged = scenario_defaults(scenario, alpha=pairs.get("alpha"),
                               a=pairs.get("a"))
    merged.update(pairs)
    cfg = RunConfig(**merged)
    cfg.validate()
    return cfg


def parse_config(text: str) -> RunConfig:
    """Parse flat configuration text into a validated RunConfig."""
    return resolve_config(_parse_pairs(text))


def env_overrides(environ=None) -> dict:
    """Typed overrides from PINCHFLOW_* environment variables."""
    environ = os.environ if environ is None else environ
    out = {}
    for name in sorted(environ):
        if not name.startswith(ENV_PREFIX):
            continue
        key = name[len(ENV_PREFIX):].lower()
        if key not in CONFIG_KEYS:
            raise ConfigError(f"environment variable {name}: unknown key "
                              f"{key!r}")
        out[key] = _coerce(key, environ[name], f"environment variable {name}")
    return out


def format_defaults(scenario: str) -> str:
    """Scenario defaults as parseable ``key = value`` lines."""
    merged = scenario_defaults(scenario)
    lines = []
    for key in CONFIG_KEYS:
        value = merged.get(key)
        if value is None:
            continue
        if key == "emit":
            text = ",".join(value)
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# artifact io
# ----------------------------------------------------------------------

def _fmt(v: float) -> str:
    return "%.17g" % (float(v),)


def write_series(path, series) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(",".join(SERIES_COLUMNS) + "\n")
        for rec in series:
            f.write(",".join(_fmt(v) for v in rec.as_row()) + "\n")


def read_series(path) -> list:
    with open(path, "r", newline="") as f:
        lines = f.read().splitlines()
    if not lines or lines[0] != ",".join(SERIES_COLUMNS):
        raise ConfigError(f"{path}: missing or wrong series header")
    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(SERIES_COLUMNS):
            raise ConfigError(
                f"{path}: line {lineno}: expected {len(SERIES_COLUMNS)} "
                f"columns; got {len(parts)}")
        try:
            values = [float(p) for p in parts]
        except ValueError:
            raise ConfigError(
                f"{path}: line {lineno}: non-numeric entry") from None
        out.append(DiagRecord(*values))
    return out


def write_snapshots(path, snapshots, law: VelocityLaw) -> None:
    with open(path, "w", newline="\n") as f:
        for snap in snapshots:
            head = {"t": snap.t, "n": int(snap.n),
                    "idx_x1": int(snap.idx_x1), "idx_x2": int(snap.idx_x2),
                    "law": law.kind, "alpha": law.alpha, "a": law.a}
            f.write(json.dumps(head, sort_keys=True) + "\n")
            for p, v in zip(snap.positions, snap.values):
                f.write("%.17g\t%.17g\n" % (p, v))


def read_snapshots(path):
    """Rebuild the stored marker fields; returns (fields, law)."""
    with open(path, "r", newline="") as f:
        lines = f.read().splitlines()
    fields = []
    law = None
    i = 0
    while i < len(lines):
        line = lines[i]
        if not line.startswith("{"):
            raise ConfigError(f"{path}: line {i + 1}: expected a JSON "
                              "snapshot header")
        try:
            head = json.loads(line)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: line {i + 1}: bad header: {e}") from None
        n = int(head["n"])
        if i + 1 + n > len(lines):
            raise ConfigError(f"{path}: truncated snapshot at line {i + 1}")
        pos = np.empty(n, dtype=np.float64)
        val = np.empty(n, dtype=np.float64)
        for k in range(n):
            a, _, b = lines[i + 1 + k].partition("\t")
            pos[k] = float(a)
            val[k] = float(b)
        fields.append(MarkerField(positions=pos, values=val,
                                  t=float(head["t"]),
                                  idx_x1=int(head["idx_x1"]),
                                  idx_x2=int(head["idx_x2"])))
        if law is None:
            law = _law_from(str(head["law"]), head.get("alpha"),
                            head.get("a"))
        i += 1 + n
    if not fields:
        raise ConfigError(f"{path}: no snapshots")
    return fields, law


def _report_lines(reports) -> list:
    out = []
    for rep in reports:
        for ln in rep.lines:
            out.append("%s.%s %s %s %s %s %s" % (
                rep.name, ln.name, _fmt(ln.t), _fmt(ln.value), _fmt(ln.bound),
                _fmt(ln.margin), "PASS" if ln.passed else "FAIL"))
    return out


def write_report(path, reports) -> None:
    with open(path, "w", newline="\n") as f:
        for line in _report_lines(reports):
            f.write(line + "\n")


_DROP = object()


def _json_safe(value):
    if value is None or isinstance(value, (bool, int, str)):
        return value
    if isinstance(value, float):
        return value
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, FitResult):
        return {"model": value.model, "params": list(value.params),
                "r_squared": value.r_squared, "window": list(value.window)}
    if isinstance(value, (list, tuple)):
        items = [_json_safe(v) for v in value]
        if any(v is _DROP for v in items):
            return _DROP
        return items
    if isinstance(value, dict):
        out = {}
        for k, v in value.items():
            safe = _json_safe(v)
            if safe is not _DROP:
                out[str(k)] = safe
        return out
    return _DROP


def _check_summary(rep: CheckReport) -> dict:
    entry = {"passed": rep.passed, "n_lines": len(rep.lines)}
    if rep.lines:
        worst = min(rep.lines, key=lambda ln: ln.margin)
        entry["worst_margin"] = worst.margin
        entry["worst_line"] = worst.name
        entry["worst_t"] = worst.t
    else:
        entry["worst_margin"] = None
        entry["worst_line"] = None
        entry["worst_t"] = None
    info = _json_safe(rep.info)
    if info is not _DROP and info:
        entry["info"] = info
    return entry


def write_summary(path, summary: dict) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(json.dumps(summary, sort_keys=True, indent=2) + "\n")


# ----------------------------------------------------------------------
# shared check builders
# ----------------------------------------------------------------------

def _growth_report(series) -> tuple:
    """Strict per-snapshot ratio growth plus the double-exponential fit of
    the second half.  Raises FitError when the series cannot support the
    fit."""
    lines = []
    for prev, cur in zip(series, series[1:]):
        gain = cur.ratio - prev.ratio
        lines.append(CheckLine("ratio_monotone", cur.t, gain, 0.0, gain,
                               gain > 0.0))
    fit = fit_growth(series, "ratio", DOUBLE_EXPONENTIAL)
    t_hi = series[-1].t
    lines.append(CheckLine("double_exponential_rate", t_hi, fit.params[1],
                           0.0, fit.params[1], fit.params[1] > 0.0))
    r2 = fit.r_squared
    lines.append(CheckLine("double_exponential_fit", t_hi, r2, 0.98,
                           r2 - 0.98, r2 >= 0.98))
    rep = CheckReport("ratio_growth",
                      lines, all(l.passed for l in lines),
                      {"fit": (fit.params, fit.r_squared, fit.window)})
    return rep, fit


def _ux_report(traj: Trajectory) -> CheckReport:
    cst = ux_calibration(traj.snapshots[0])
    lines = []
    for snap in traj.snapshots:
        lines.extend(ux_bound_check(snap, constant=cst).lines)
    return CheckReport("gradient_transform_bound", lines,
                       all(l.passed for l in lines), {"constant": cst})


def _series_consistency(series) -> CheckReport:
    """Internal consistency of a stored series: time strictly increasing,
    ratio equal to x2/x1, log_ratio equal to log(ratio)."""
    rel = 1e-12
    lines = []
    prev_t = None
    for rec in series:
        if prev_t is not None:
            dt = rec.t - prev_t
            lines.append(CheckLine("time_increasing", rec.t, dt, 0.0, dt,
                                   dt > 0.0))
        prev_t = rec.t
        if math.isfinite(rec.x1) and math.isfinite(rec.x2) and rec.x1 > 0.0:
            target = rec.x2 / rec.x1
            err = abs(rec.ratio - target) / max(abs(target), 1.0)
            lines.append(CheckLine("ratio_definition", rec.t, err, rel,
                                   rel - err, err <= rel))
            if rec.ratio > 0.0:
                err_log = abs(rec.log_ratio - math.log(rec.ratio))
                lines.append(CheckLine("log_ratio_definition", rec.t,
                                       err_log, rel, rel - err_log,
                                       err_log <= rel))
    return CheckReport("series_consistency", lines,
                       all(l.passed for l in lines), {"n_rows": len(series)})


def _patch_series_report(series, gamma: float, M: float,
                         termination: str) -> CheckReport:
    """Pinch inequalities recomputable from a stored series alone."""
    cst = pinch_strength_constant(gamma)
    t0 = series[0].t
    x1_0 = series[0].x1
    lines = []
    prev_x1 = None
    for rec in series:
        sep = rec.x2 - M * rec.x1
        lines.append(CheckLine("corner_separation", rec.t, M * rec.x1,
                               rec.x2, sep, sep > 0.0))
        decay_bound = x1_0 ** gamma - cst * gamma * (rec.t - t0)
        margin = decay_bound - rec.x1 ** gamma
        lines.append(CheckLine("power_decay", rec.t, rec.x1 ** gamma,
                               decay_bound, margin, margin >= -1e-3))
        if prev_x1 is not None:
            lines.append(CheckLine("pinch_monotone", rec.t, rec.x1, prev_x1,
                                   prev_x1 - rec.x1, rec.x1 < prev_x1))
        prev_x1 = rec.x1
    deadline = pinch_time_bound(gamma, x1_0)
    t_last = series[-1].t
    lines.append(CheckLine("pinch_time", t_last, t_last, 1.1 * deadline,
                           1.1 * deadline - t_last,
                           t_last <= 1.1 * deadline))
    detected = termination == BLOWUP_X1
    lines.append(CheckLine("pinch_detected", t_last,
                           1.0 if detected else 0.0, 1.0,
                           0.0 if detected else -1.0, detected))
    return CheckReport("pinching_series_bounds", lines,
                       all(l.passed for l in lines),
                       {"termination": termination,
                        "pinch_time_bound": deadline})


# ----------------------------------------------------------------------
# scenario execution
# ----------------------------------------------------------------------

@dataclass
class ScenarioOutcome:
    termination: str
    t_final: float
    n_steps: int
    n_snapshots: int
    milestone: str
    milestone_reached: bool
    reports: list
    fits: dict
    series: dict
    snapshots: dict
    failure: str | None = None


def _numerical(termination: str) -> bool:
    return termination in (STEP_UNDERFLOW, MARKER_CROSSING)


def _outcome_from(traj: Trajectory, milestone: str, reached: bool,
                  reports, fits, series, snapshots,
                  failure=None) -> ScenarioOutcome:
    return ScenarioOutcome(
        termination=traj.termination, t_final=traj.snapshots[-1].t,
        n_steps=traj.n_steps, n_snapshots=len(traj.snapshots),
        milestone=milestone, milestone_reached=reached, reports=list(reports),
        fits=dict(fits), series=dict(series), snapshots=dict(snapshots),
        failure=failure)


def _run_euler(cfg: RunConfig) -> ScenarioOutcome:
    profile = cfg.build_profile()
    law = cfg.velocity_law()
    traj = run(profile, law, cfg.step_control(), recorder=record)
    series = {"series": traj.records}
    snapshots = {"snapshots": (traj.snapshots, law)}
    try:
        growth, fit = _growth_report(traj.records)
    except FitError as e:
        return _outcome_from(traj, "second_half_ratio_fit", False, [], {},
                             series, snapshots, failure=str(e))
    reports = [growth,
               lemma_bounds_check(traj),
               support_bound_check(traj.records),
               _ux_report(traj),
               invariant_suite(traj, law, profile)]
    return _outcome_from(traj, "second_half_ratio_fit", True, reports,
                         {"ratio_double_exponential": fit}, series, snapshots)


def _run_patch(cfg: RunConfig) -> ScenarioOutcome:
    profile = cfg.build_profile()
    law = cfg.velocity_law()
    traj = run(profile, law, cfg.step_control(), recorder=record)
    series = {"series": traj.records}
    snapshots = {"snapshots": (traj.snapshots, law)}
    reached = traj.termination == BLOWUP_X1
    failure = None
    if not reached and _numerical(traj.termination):
        failure = f"integrator stopped ({traj.termination}) before pinch " \
                  "detection"
    reports = [patch_bounds(traj, gamma=law.gamma, M=cfg.M),
               support_bound_check(traj.records),
               invariant_suite(traj, law, profile)]
    return _outcome_from(traj, "pinch_detected", reached, reports, {},
                         series, snapshots, failure=failure)


def _run_local_comparison(cfg: RunConfig) -> ScenarioOutcome:
    profile = cfg.build_profile()
    ctl = cfg.step_control()
    law_ref = cfg.velocity_law()
    law_local = VelocityLaw.local()
    traj_ref = run(profile, law_ref, ctl, recorder=record)
    traj_local = run(profile, law_local, ctl, recorder=record)
    series = {"series": traj_ref.records, "series_local": traj_local.records}
    snapshots = {"snapshots": (traj_ref.snapshots, law_ref)}
    try:
        disc = growth_discrimination(traj_ref.records, traj_local.records)
    except FitError as e:
        return _outcome_from(traj_ref, "model_discrimination", False, [], {},
                             series, snapshots, failure=str(e))
    fits = {}
    for key in ("euler_dexp", "euler_exp", "local_dexp", "local_exp"):
        if key in disc.info:
            params, r2 = disc.info[key]
            fits[key] = FitResult(
                model=DOUBLE_EXPONENTIAL if key.endswith("dexp")
                else EXPONENTIAL,
                params=tuple(params), r_squared=r2,
                window=tuple(disc.info.get("window", (0.0, 0.0))))
    reports = [disc,
               invariant_suite(traj_ref, law_ref, profile,
                               label="transport_invariants_reference"),
               invariant_suite(traj_local, law_local, profile,
                               label="transport_invariants_local")]
    return _outcome_from(traj_ref, "model_discrimination", True, reports,
                         fits, series, snapshots)


def _run_hyperbolic(cfg: RunConfig) -> ScenarioOutcome:
    profile = cfg.build_profile()
    ctl = cfg.step_control()
    try:
        rep = hyperbolic_approx_compare(profile, ctl)
    except FitError as e:
        empty = Trajectory(snapshots=[profile], termination=STEP_UNDERFLOW,
                           n_steps=0)
        return _outcome_from(empty, "model_fits", False, [], {},
                             {}, {}, failure=str(e))
    series = {}
    ref_records = rep.info.get("records_reference", [])
    approx_records = rep.info.get("records_approximation", [])
    if ref_records:
        series["series"] = ref_records
    if approx_records:
        series["series_approx"] = approx_records
    fits = {}
    for key in ("reference", "approximation"):
        fk = f"fit_{key}"
        if fk in rep.info:
            params, r2, window = rep.info[fk]
            fits[key] = FitResult(model=DOUBLE_EXPONENTIAL,
                                  params=tuple(params), r_squared=r2,
                                  window=tuple(window))
    termination = rep.info.get("termination_reference", "TEnd")
    t_final = ref_records[-1].t if ref_records else profile.t
    return ScenarioOutcome(
        termination=termination, t_final=t_final,
        n_steps=len(ref_records), n_snapshots=len(ref_records),
        milestone="model_fits", milestone_reached=True, reports=[rep],
        fits=fits, series=series, snapshots={}, failure=None)


def _run_custom(cfg: RunConfig) -> ScenarioOutcome:
    profile = cfg.build_profile()
    law = cfg.velocity_law()
    traj = run(profile, law, cfg.step_control(), recorder=record)
    series = {"series": traj.records}
    snapshots = {"snapshots": (traj.snapshots, law)}
    reports = [support_bound_check(traj.records),
               invariant_suite(traj, law, profile)]
    return _outcome_from(traj, "run_completed", True, reports, {},
                         series, snapshots)


_SCENARIO_RUNNERS = {
    EULER_GROWTH: _run_euler,
    PATCH_BLOWUP: _run_patch,
    LOCAL_COMPARISON: _run_local_comparison,
    HYPERBOLIC_SCENARIO: _run_hyperbolic,
    CUSTOM: _run_custom,
}


def _build_summary(cfg: RunConfig, outcome: ScenarioOutcome,
                   exit_code: int) -> dict:
    return {
        "config": cfg.as_dict(),
        "scenario": cfg.scenario,
        "termination": outcome.termination,
        "t_final": outcome.t_final,
        "n_steps": outcome.n_steps,
        "n_snapshots": outcome.n_snapshots,
        "milestone": {"name": outcome.milestone,
                      "reached": outcome.milestone_reached},
        "failure": outcome.failure,
        "fits": {k: _json_safe(f) for k, f in sorted(outcome.fits.items())},
        "checks": {r.name: _check_summary(r) for r in outcome.reports},
        "all_passed": all(r.passed for r in outcome.reports),
        "exit_code": exit_code,
    }


def _emit_artifacts(cfg: RunConfig, outcome: ScenarioOutcome,
                    exit_code: int, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    if "series" in cfg.emit:
        for key, recs in sorted(outcome.series.items()):
            write_series(out_dir / f"{key}.csv", recs)
    if "snapshots" in cfg.emit:
        for key, (snaps, law) in sorted(outcome.snapshots.items()):
            write_snapshots(out_dir / f"{key}.tsv", snaps, law)
    if "report" in cfg.emit:
        write_report(out_dir / "report.txt", outcome.reports)
    write_summary(out_dir / "summary.json",
                  _build_summary(cfg, outcome, exit_code))


def _execute(cfg: RunConfig, stream) -> int:
    outcome = _SCENARIO_RUNNERS[cfg.scenario](cfg)
    if outcome.failure is not None:
        exit_code = 3
    elif all(r.passed for r in outcome.reports):
        exit_code = 0
    else:
        exit_code = 1
    _emit_artifacts(cfg, outcome, exit_code, Path(cfg.output_dir))
    n_lines = sum(len(r.lines) for r in outcome.reports)
    n_failed = sum(1 for r in outcome.reports for ln in r.lines
                   if not ln.passed)
    print(f"{cfg.scenario}: termination={outcome.termination} "
          f"t_final={_fmt(outcome.t_final)} checks={n_lines} "
          f"failed={n_failed} exit={exit_code}", file=stream)
    if outcome.failure is not None:
        print(f"numerical failure: {outcome.failure}", file=stream)
    for rep in outcome.reports:
        for ln in rep.lines:
            if not ln.passed:
                print(f"FAIL {rep.name}.{ln.name} t={_fmt(ln.t)} "
                      f"value={_fmt(ln.value)} bound={_fmt(ln.bound)} "
                      f"margin={_fmt(ln.margin)}", file=stream)
    return exit_code


# ----------------------------------------------------------------------
# verify
# ----------------------------------------------------------------------

def _guarded(name: str, check):
    """Run a checker whose hypotheses re-read data might violate; a
    violation is a failed check, not a crash."""
    try:
        return check()
    except (HypothesisError, ContractError) as e:
        line = CheckLine("hypothesis_violated", 0.0, 1.0, 0.0, -1.0, False)
        return CheckReport(name, [line], False, {"error": str(e)})


def _verify(cfg: RunConfig, out_dir: Path, termination: str,
            stream) -> int:
    reports = []
    series = None
    series_path = out_dir / "series.csv"
    if series_path.exists():
        series = read_series(series_path)
        reports.append(_series_consistency(series))
        if cfg.scenario in (EULER_GROWTH, HYPERBOLIC_SCENARIO,
                            LOCAL_COMPARISON):
            growth, _ = _growth_report(series)
            reports.append(growth)
            reports.append(support_bound_check(series))
        elif cfg.scenario == PATCH_BLOWUP:
            gamma = cfg.velocity_law().gamma
            reports.append(_patch_series_report(series, gamma, cfg.M,
                                                termination))
            reports.append(support_bound_check(series))
        else:
            reports.append(support_bound_check(series))
        local_path = out_dir / "series_local.csv"
        if cfg.scenario == LOCAL_COMPARISON and local_path.exists():
            reports.append(growth_discrimination(series,
                                                 read_series(local_path)))
        approx_path = out_dir / "series_approx.csv"
        if cfg.scenario == HYPERBOLIC_SCENARIO and approx_path.exists():
            approx_growth, _ = _growth_report(read_series(approx_path))
            approx_growth.name = "ratio_growth_approx"
            reports.append(approx_growth)
    snaps_path = out_dir / "snapshots.tsv"
    if snaps_path.exists():
        fields, law = read_snapshots(snaps_path)
        traj = Trajectory(snapshots=fields, termination=termination,
                          n_steps=max(0, len(fields) - 1))
        reports.append(invariant_suite(traj, law))
        if cfg.scenario == EULER_GROWTH:
            reports.append(_guarded("growth_rate_decomposition",
                                    lambda: lemma_bounds_check(traj)))
            reports.append(_guarded("gradient_transform_bound",
                                    lambda: _ux_report(traj)))
        elif cfg.scenario == PATCH_BLOWUP:
            reports.append(_guarded(
                "pinching_corner_bounds",
                lambda: patch_bounds(traj, gamma=law.gamma, M=cfg.M)))
    if series is None and not snaps_path.exists():
        raise ConfigError(
            f"{out_dir}: no series.csv or snapshots.tsv to verify")
    n_lines = sum(len(r.lines) for r in reports)
    failed = [(r, ln) for r in reports for ln in r.lines if not ln.passed]
    for rep, ln in failed:
        print(f"FAIL {rep.name}.{ln.name} t={_fmt(ln.t)} "
              f"value={_fmt(ln.value)} bound={_fmt(ln.bound)} "
              f"margin={_fmt(ln.margin)}", file=stream)
    verdict = "PASS" if not failed else "FAIL"
    print(f"verify {cfg.scenario}: {verdict} checks={n_lines} "
          f"failed={len(failed)}", file=stream)
    return 0 if not failed else 1


# ----------------------------------------------------------------------
# entry points
# ----------------------------------------------------------------------

def _apply_threads(threads) -> int:
    import numba
    available = int(numba.config.NUMBA_NUM_THREADS)
    if threads is None:
        return available
    n = int(threads)
    if n < 1:
        raise ConfigError(f"--threads must be a positive integer; got {n}")
    effective = min(n, available)
    numba.set_num_threads(effective)
    return effective


def _load_config(args, environ=None) -> RunConfig:
    pairs = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        pairs.update(_parse_pairs(path.read_text()))
    pairs.update(env_overrides(environ))
    if getattr(args, "out", None):
        pairs["output_dir"] = args.out
    if getattr(args, "snapshot_stride", None) is not None:
        pairs["snapshot_stride"] = args.snapshot_stride
    return resolve_config(pairs)


def _config_from_summary(summary: dict) -> RunConfig:
    pairs = {}
    for key, value in summary.get("config", {}).items():
        if value is None or key not in CONFIG_KEYS:
            continue
        pairs[key] = _coerce(key, value, "summary.json")
    return resolve_config(pairs)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pinchflow",
        description="Marker transport scenarios with certified inequality "
                    "checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="path to a key = value config file")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--threads", type=int, default=None,
                       help="worker thread cap; clamped to the available "
                            "pool")
        p.add_argument("--snapshot-stride", dest="snapshot_stride", type=int,
                       default=None, help="store every k-th step")

    add_common(sub.add_parser("run", help="run a configured scenario"))
    add_common(sub.add_parser("compare",
                              help="run a two-law comparison scenario"))
    verify_p = sub.add_parser("verify",
                              help="re-check previously written artifacts")
    verify_p.add_argument("--out", default="out",
                          help="directory holding the artifacts")
    verify_p.add_argument("--config",
                          help="config file (defaults to the summary echo)")
    verify_p.add_argument("--threads", type=int, default=None)
    defaults_p = sub.add_parser("print-defaults",
                                help="print resolved scenario defaults")
    defaults_p.add_argument("scenario", nargs="?", default=None,
                            choices=SCENARIOS)
    return parser


def main(argv=None, environ=None, stream=None) -> int:
    stream = sys.stdout if stream is None else stream
    parser = _build_parser()
    try:
        args = parser.parse_args(sys.argv[1:] if argv is None else list(argv))
    except SystemExit as e:
        code = e.code
        return int(code) if isinstance(code, int) else 2
    try:
        if args.command == "print-defaults":
            names = SCENARIOS if args.scenario is None else (args.scenario,)
            chunks = [format_defaults(s) for s in names]
            print("\n".join(chunks), end="", file=stream)
            return 0
        _apply_threads(args.threads)
        if args.command in ("run", "compare"):
            cfg = _load_config(args, environ)
            if args.command == "compare" and cfg.scenario not in (
                    LOCAL_COMPARISON, HYPERBOLIC_SCENARIO):
                raise ConfigError(
                    "compare needs scenario local_comparison or "
                    f"hyperbolic_approx; got {cfg.scenario!r}")
            return _execute(cfg, stream)
        out_dir = Path(args.out)
        summary_path = out_dir / "summary.json"
        if not summary_path.exists():
            raise ConfigError(f"missing {summary_path}")
        summary = json.loads(summary_path.read_text())
        if getattr(args, "config", None):
            cfg = _load_config(args, environ)
        else:
            cfg = _config_from_summary(summary)
        termination = str(summary.get("termination", ""))
        return _verify(cfg, out_dir, termination, stream)
    except ConfigError as e:
        print(f"pinchflow: config error: {e}", file=sys.stderr)
        return 2
    except FitError as e:
        print(f"pinchflow: numerical failure: {e}", file=sys.stderr)
        return 3
    except PinchflowError as e:
        print(f"pinchflow: error: {e}", file=sys.stderr)
        return 2


def console_main() -> None:
    raise SystemExit(main())
