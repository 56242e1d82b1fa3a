"""Time evolution of marker fields along characteristics.

Marker values never change (pure transport); only positions move. Oddness
is enforced structurally: the nonnegative half is integrated and the
negative half is its exact mirror, with the center marker pinned at 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from pinchflow.errors import ConfigError, PinchflowError
from pinchflow.fields import MarkerField
from pinchflow.kernels import VelocityLaw, velocity_many

T_END = "TEnd"
BLOWUP_X1 = "BlowupX1"
STEP_UNDERFLOW = "StepUnderflow"
MARKER_CROSSING = "MarkerCrossing"
TERMINATIONS = (T_END, BLOWUP_X1, STEP_UNDERFLOW, MARKER_CROSSING)


class StepUnderflow(PinchflowError):
    """Required step size fell below dt_min."""


class MarkerCrossing(PinchflowError):
    """Marker ordering violated during a step."""


@dataclass(frozen=True)
class StepControl:
    dt_init: float = 0.05
    cfl: float = 0.5
    dt_min: float = 1e-6
    eps_blowup: float = 1e-6
    t_end: float = 10.0
    snapshot_stride: int = 1

    def __post_init__(self):
        if not self.dt_min < self.dt_init:
            raise ConfigError(
                f"requires dt_min < dt_init; got {self.dt_min} >= {self.dt_init}")
        if not self.eps_blowup > 0.0:
            raise ConfigError(f"requires eps_blowup > 0; got {self.eps_blowup}")
        if not self.cfl > 0.0:
            raise ConfigError(f"requires cfl > 0; got {self.cfl}")
        if not self.t_end > 0.0:
            raise ConfigError(f"requires t_end > 0; got {self.t_end}")
        if int(self.snapshot_stride) != self.snapshot_stride or self.snapshot_stride < 1:
            raise ConfigError(
                f"requires integer snapshot_stride >= 1; got {self.snapshot_stride}")


@dataclass
class Trajectory:
    snapshots: list
    termination: str
    n_steps: int
    records: list = dc_field(default_factory=list)


def velocities(state: MarkerField, law: VelocityLaw) -> np.ndarray:
    """Velocity of every marker; antisymmetric with an exact zero at the
    center for odd states."""
    return velocity_many(law, state, state.positions)


def _full_from_half(half: np.ndarray) -> np.ndarray:
    return np.concatenate((-half[:0:-1], half))


def _half_velocities(half_pos: np.ndarray, values: np.ndarray,
                     law: VelocityLaw, stage: str) -> np.ndarray:
    """Velocities at the nonnegative markers of the mirrored field."""
    if not np.all(np.diff(half_pos) > 0.0):
        raise MarkerCrossing(f"marker ordering violated at {stage}")
    full = _full_from_half(half_pos)
    f = MarkerField(full, values)
    u = velocity_many(law, f, full)
    mid = half_pos.shape[0] - 1
    return u[mid:]


def _choose_dt(state: MarkerField, u: np.ndarray, ctl: StepControl) -> float:
    """Gap-closing step limit: no pair of adjacent markers may be driven
    together by more than cfl of its gap in one step."""
    gaps = np.diff(state.positions)
    du = np.abs(np.diff(u))
    rate = np.max(np.where(gaps > 0.0, du / gaps, np.inf))
    dt = ctl.dt_init
    if rate > 0.0:
        dt = min(dt, ctl.cfl / rate)
    return dt


def _rk4_half(half: np.ndarray, values: np.ndarray, law: VelocityLaw,
              dt: float) -> np.ndarray:
    k1 = _half_velocities(half, values, law, "stage 1")
    k2 = _half_velocities(half + 0.5 * dt * k1, values, law, "stage 2")
    k3 = _half_velocities(half + 0.5 * dt * k2, values, law, "stage 3")
    k4 = _half_velocities(half + dt * k3, values, law, "stage 4")
    out = half + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    out[0] = half[0]
    return out


def step(state: MarkerField, law: VelocityLaw, ctl: StepControl) -> MarkerField:
    """One adaptive RK4 step; raises StepUnderflow or MarkerCrossing."""
    state.require_odd("time stepping")
    u = velocities(state, law)
    dt = _choose_dt(state, u, ctl)
    if dt < ctl.dt_min:
        raise StepUnderflow(
            f"required step {dt:.3e} below dt_min {ctl.dt_min:.3e} at t={state.t:.6f}")
    hit_end = state.t + dt >= ctl.t_end
    if hit_end:
        dt = ctl.t_end - state.t
    mid = state.center_index
    half = state.positions[mid:].copy()
    new_half = _rk4_half(half, state.values, law, dt)
    if not (np.all(np.diff(new_half) > 0.0) and new_half[0] == 0.0):
        raise MarkerCrossing(f"marker ordering violated after step at t={state.t:.6f}")
    new_pos = _full_from_half(new_half)
    new_t = ctl.t_end if hit_end else state.t + dt
    return MarkerField(new_pos, state.values, t=new_t,
                       idx_x1=state.idx_x1, idx_x2=state.idx_x2)


def run(profile: MarkerField, law: VelocityLaw, ctl: StepControl,
        recorder=None) -> Trajectory:
    """Integrate until t_end, pinch detection, or step failure.

    recorder, if given, is called on every stored snapshot and its results
    collected into Trajectory.records.
    """
    profile.validate()
    state = profile
    snapshots = [state]
    records = []
    if recorder is not None:
        records.append(recorder(state))
    n_steps = 0
    termination = None
    while True:
        if state.idx_x1 >= 0 and state.x1 < ctl.eps_blowup:
            termination = BLOWUP_X1
            break
        if state.t >= ctl.t_end:
            termination = T_END
            break
        try:
            state = step(state, law, ctl)
        except StepUnderflow:
            termination = STEP_UNDERFLOW
            break
        except MarkerCrossing:
            termination = MARKER_CROSSING
            break
        n_steps += 1
        if n_steps % ctl.snapshot_stride == 0:
            snapshots.append(state)
            if recorder is not None:
                records.append(recorder(state))
    if state.t > snapshots[-1].t:
        snapshots.append(state)
        if recorder is not None:
            records.append(recorder(state))
    return Trajectory(snapshots=snapshots, termination=termination,
                      n_steps=n_steps, records=records)


def sample(state: MarkerField, x: float) -> float:
    """Piecewise-linear reconstruction; zero outside the support."""
    return state.sample(x)
