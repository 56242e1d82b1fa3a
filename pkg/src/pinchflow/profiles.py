"""Odd plateau initial data for the transport scenarios.

Each profile is odd, vanishes at the origin and outside a compact support,
rises smoothly to a plateau of exact height 1 between two tracked radii, and
falls smoothly back to zero. The two plateau corners are tracked markers so
their trajectories can be followed exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from pinchflow.errors import ConfigError
from pinchflow.fields import MarkerField

SMOOTHSTEP_QUINTIC = "smoothstep_quintic"
COSINE = "cosine"
RAMP_KINDS = (SMOOTHSTEP_QUINTIC, COSINE)


def ramp(t: float, kind: str = SMOOTHSTEP_QUINTIC) -> float:
    """Monotone C2 ramp from 0 at t=0 to 1 at t=1 with flat ends."""
    assert -1e-9 <= t <= 1.0 + 1e-9, f"ramp argument {t} outside [0, 1]"
    t = min(1.0, max(0.0, float(t)))
    if kind == SMOOTHSTEP_QUINTIC:
        return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    if kind == COSINE:
        return 0.5 * (1.0 - math.cos(math.pi * t))
    raise ConfigError(f"unknown ramp kind {kind!r}; expected one of {RAMP_KINDS}")


@dataclass(frozen=True)
class ProfileSpec:
    """Geometry of a plateau profile.

    n_markers counts half-line intervals; the built field carries
    2*n_markers + 1 markers.
    """

    x1_0: float
    x2_0: float
    M: float
    support_bound: float
    ramp_kind: str = SMOOTHSTEP_QUINTIC
    n_markers: int = 4096
    grading: float = 2.0

    def validate_common(self) -> None:
        if not (0.0 < self.x1_0 < self.x2_0):
            raise ConfigError(
                f"requires 0 < x1_0 < x2_0; got x1_0={self.x1_0}, x2_0={self.x2_0}")
        if not self.M > 1.0:
            raise ConfigError(f"requires separation factor M > 1; got M={self.M}")
        if not self.support_bound > self.x2_0:
            raise ConfigError(
                "requires support_bound > x2_0 so the falling ramp has room; "
                f"got support_bound={self.support_bound}, x2_0={self.x2_0}")
        if self.ramp_kind not in RAMP_KINDS:
            raise ConfigError(
                f"unknown ramp kind {self.ramp_kind!r}; expected one of {RAMP_KINDS}")
        if int(self.n_markers) != self.n_markers or self.n_markers < 64:
            raise ConfigError(
                f"requires integer n_markers >= 64; got {self.n_markers}")
        if not self.grading >= 1.0:
            raise ConfigError(f"requires grading >= 1; got {self.grading}")

    def validate_euler(self) -> None:
        self.validate_common()
        if not self.M > 8.0:
            raise ConfigError(
                "gradient-growth scenario requires separation factor M > 8; "
                f"got M={self.M}")
        if not self.M * self.x1_0 <= self.x2_0:
            raise ConfigError(
                f"requires M*x1_0 <= x2_0; got {self.M * self.x1_0} > {self.x2_0}")
        if self.support_bound != 1.0:
            raise ConfigError(
                "gradient-growth scenario fixes support_bound = 1; "
                f"got {self.support_bound}")
        if not self.x2_0 < 1.0:
            raise ConfigError(
                f"requires x2_0 < 1 (plateau inside the unit support); got {self.x2_0}")

    def validate_patch(self) -> None:
        self.validate_common()
        if not self.M * self.x1_0 < self.x2_0:
            raise ConfigError(
                f"requires M*x1_0 < x2_0; got {self.M * self.x1_0} >= {self.x2_0}")
        if not self.support_bound <= 2.0 * self.x2_0:
            raise ConfigError(
                "pinch scenario requires support inside [-2*x2_0, 2*x2_0]; "
                f"got support_bound={self.support_bound} > {2.0 * self.x2_0}")


def _graded_half_grid(spec: ProfileSpec) -> np.ndarray:
    n = int(spec.n_markers)
    s = (np.arange(n + 1, dtype=np.float64) / n) ** spec.grading
    return s * spec.support_bound


def _snap_marker(grid: np.ndarray, target: float, what: str) -> int:
    idx = int(np.argmin(np.abs(grid - target)))
    idx = max(1, min(idx, grid.shape[0] - 2))
    grid[idx] = target
    if not (grid[idx - 1] < target < grid[idx + 1]):
        raise ConfigError(
            f"n_markers too small to place a marker at {what}={target} "
            "between its neighbors; increase n_markers or grading")
    return idx


def _build(spec: ProfileSpec, shape=None) -> MarkerField:
    if shape is None:
        def shape(t: float) -> float:
            return ramp(t, spec.ramp_kind)
    grid = _graded_half_grid(spec)
    i1 = _snap_marker(grid, spec.x1_0, "x1_0")
    i2 = _snap_marker(grid, spec.x2_0, "x2_0")
    if i1 == i2:
        raise ConfigError(
            "n_markers too small to separate x1_0 and x2_0; increase n_markers")
    if not np.all(np.diff(grid) > 0.0):
        raise ConfigError(
            "marker grid not strictly increasing after placing the plateau "
            "corners; increase n_markers")

    vals = np.empty_like(grid)
    for k, x in enumerate(grid):
        if x <= 0.0:
            vals[k] = 0.0
        elif x < spec.x1_0:
            vals[k] = shape(x / spec.x1_0)
        elif x <= spec.x2_0:
            vals[k] = 1.0
        elif x < spec.support_bound:
            vals[k] = shape(
                (spec.support_bound - x) / (spec.support_bound - spec.x2_0))
        else:
            vals[k] = 0.0

    n = grid.shape[0] - 1
    positions = np.concatenate((-grid[:0:-1], grid))
    values = np.concatenate((-vals[:0:-1], vals))
    field = MarkerField(positions, values, t=0.0,
                        idx_x1=n + i1, idx_x2=n + i2)
    field.validate()
    field.require_odd("built profile")
    return field


def build_euler_profile(spec: ProfileSpec) -> MarkerField:
    """Odd plateau field on [-1, 1] for the gradient-growth scenario."""
    spec.validate_euler()
    return _build(spec)


def build_patch_profile(spec: ProfileSpec) -> MarkerField:
    """Odd plateau field supported inside [-2*x2_0, 2*x2_0] for the
    pinch scenario."""
    spec.validate_patch()
    return _build(spec)


def build_comparison_profile(spec: ProfileSpec) -> MarkerField:
    """Euler-type plateau field whose ramps are linear instead of smooth.

    Used for model discrimination: with linear ramps every ramp interval
    starts at the same slope, so under the local law the steepest interval
    is the plateau-adjacent one for all time and the gradient sup grows as
    one pure exponential.  Smooth ramps instead hand the lead from interval
    to interval, which bends the measured growth away from a single
    exponential.
    """
    spec.validate_euler()
    return _build(spec, shape=lambda t: t)


def build_plateau_profile(spec: ProfileSpec) -> MarkerField:
    """Odd plateau field with only the shape constraints common to all
    scenarios; for fully custom configurations."""
    spec.validate_common()
    return _build(spec)


def euler_default_spec(n_markers: int = 4096, grading: float = 2.0) -> ProfileSpec:
    return ProfileSpec(x1_0=1e-3, x2_0=0.5, M=16.0, support_bound=1.0,
                       ramp_kind=SMOOTHSTEP_QUINTIC, n_markers=n_markers,
                       grading=grading)


def pinch_strength_constant(gamma: float) -> float:
    """Constant C with d/dt x1^gamma <= -C*gamma along the pinch flow."""
    if not 0.0 < gamma < 1.0:
        raise ConfigError(f"requires 0 < gamma < 1; got {gamma}")
    return (3.0 ** (1.0 - gamma) - 1.0) / (2.0 * (1.0 - gamma))


def pinch_time_bound(gamma: float, x1_0: float) -> float:
    """Upper bound on the pinch time: x1 reaches 0 by x1_0^gamma/(C*gamma)."""
    c = pinch_strength_constant(gamma)
    return x1_0**gamma / (c * gamma)


def patch_separation_factor(alpha: float) -> int:
    """Smallest integer separation factor M for which the outer plateau edge
    pulls the inner edge inward: the two-sided pull across a gap of relative
    size 1/M stays below half the one-sided pull from a tripled radius."""
    gamma = 1.0 - alpha
    if not 0.0 < gamma < 1.0:
        raise ConfigError(f"requires 0 < alpha < 1; got {alpha}")
    target = 0.5 * (3.0 ** (1.0 - gamma) - 1.0)

    def h(r: float) -> float:
        return ((1.0 + r) ** (1.0 - gamma) - (1.0 - r) ** (1.0 - gamma)) / r ** (1.0 - gamma)

    for m in range(2, 10_000):
        if h(1.0 / m) <= target:
            return m
    raise ConfigError(f"no separation factor below 10000 works for alpha={alpha}")


def patch_plateau_end(alpha: float, x1_0: float, separation: float) -> float:
    """Smallest integer outer radius X such that the outer plateau corner,
    moving no faster than the global speed bound, stays above
    separation*x1_0 for the whole predicted pinch time."""
    gamma = 1.0 - alpha
    t_star = pinch_time_bound(gamma, x1_0)
    for x in range(1, 1_000_000):
        speed = 2.0 * (2.0 * x) ** (1.0 - gamma) / (1.0 - gamma)
        if x - t_star * speed > separation * x1_0:
            return float(x)
    raise ConfigError(
        f"no outer radius below 1e6 satisfies the safety margin for alpha={alpha}")


def patch_default_spec(alpha: float = 0.5, n_markers: int = 4096,
                       grading: float = 2.0) -> ProfileSpec:
    m = patch_separation_factor(alpha)
    x1_0 = 0.25
    x2_0 = patch_plateau_end(alpha, x1_0, m)
    return ProfileSpec(x1_0=x1_0, x2_0=x2_0, M=float(m),
                       support_bound=2.0 * x2_0,
                       ramp_kind=SMOOTHSTEP_QUINTIC, n_markers=n_markers,
                       grading=grading)
