"""Measurements, growth-model fits, and certified inequality checks.

Everything here consumes marker states or the per-snapshot records produced
by a run and turns them into plain numbers: tracked corner positions, sup of
the discrete gradient, support radius, the log-kernel transform of the field,
and a subsampled Hölder-1/2 seminorm.  On top of those measurements sit the
checks: a four-piece decomposition of the corner-ratio growth rate with
closed-form bounds for each piece, pull and decay inequalities for the
pinching corner of the power-law model, a support growth envelope, and a
calibrated bound on the gradient transform.  Each check reports one line per
inequality with its value, bound, margin, and verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import ContractError, FitError, HypothesisError
from .evolve import BLOWUP_X1, StepControl, Trajectory, run
from .fields import MarkerField, slope_jumps
from .kernels import (VelocityLaw, hilbert_many, ratio_kernel,
                      reference_integrate, velocity, velocity_many)
from .profiles import pinch_strength_constant, pinch_time_bound

__all__ = [
    "EXPONENTIAL",
    "DOUBLE_EXPONENTIAL",
    "DiagRecord",
    "FitResult",
    "CheckLine",
    "CheckReport",
    "LemmaDecomposition",
    "record",
    "fit_growth",
    "log_ratio_rate",
    "lemma_decomposition",
    "lemma_bounds_check",
    "patch_bounds",
    "support_bound_check",
    "ux_bound_check",
    "ux_calibration",
    "growth_discrimination",
    "hyperbolic_approx_compare",
    "invariant_suite",
    "SERIES_COLUMNS",
]

EXPONENTIAL = "Exponential"
DOUBLE_EXPONENTIAL = "DoubleExponential"
GROWTH_MODELS = (EXPONENTIAL, DOUBLE_EXPONENTIAL)

# Quantities fit_growth accepts; both are positive and increasing for the
# growth scenarios.
FIT_QUANTITIES = ("ratio", "grad_sup")

SERIES_COLUMNS = (
    "t",
    "x1",
    "x2",
    "ratio",
    "log_ratio",
    "grad_sup",
    "support_D",
    "ux_sup",
    "holder_half",
)

# Closed-form constants bounding the four pieces of the rate decomposition.
# piece I: 3 log 3 + 2 log 2 bounds the full positive mass near the inner
# corner; piece II: each unit of log-separation contributes at least
# 2 - (1/2) log 3; piece III: the near-outer-corner piece loses at most the
# kernel's own mass around its singularity.
BOUND_I_CONST = 3.0 * math.log(3.0) + 2.0 * math.log(2.0)
BOUND_II_COEF = 2.0 - 0.5 * math.log(3.0)
BOUND_III_CONST = -3.0342127941220552

# Worst-case support growth rate per unit of D(|log D| + 1), used as a floor
# under the observed-rate calibration.
SUPPORT_RATE_FLOOR = 2.0 * (1.0 + math.log(2.0))

# Floor for the gradient-transform constant: two units per Hölder-1/2
# exponent.
UX_CONST_FLOOR = 4.0

DEFAULT_BOUND_TOL = 1e-6
DEFAULT_RATE_REL_TOL = 0.05
MAX_HOLDER_PAIR_OFFSETS = 64


# ----------------------------------------------------------------------
# per-snapshot measurement
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class DiagRecord:
    """One row of the measured time series.

    Corner-derived entries are NaN when the state tracks no corners; all
    other entries are defined for any valid marker field.
    """

    t: float
    x1: float
    x2: float
    ratio: float
    log_ratio: float
    grad_sup: float
    support_D: float
    ux_sup: float
    holder_half: float

    def as_row(self) -> tuple:
        return tuple(getattr(self, c) for c in SERIES_COLUMNS)


def _grad_sup(state: MarkerField) -> float:
    dp = np.diff(state.positions)
    dv = np.diff(state.values)
    return float(np.max(np.abs(dv / dp)))


def _holder_half(state: MarkerField) -> float:
    """Subsampled Hölder-1/2 seminorm over pairs at dyadic index offsets.

    A lower estimate of the true seminorm; the gradient-transform bound uses
    it inside a logarithm on the large side of the inequality, so
    underestimating only makes that check stricter.
    """
    p = state.positions
    v = state.values
    best = 0.0
    d = 1
    levels = 0
    while d < p.shape[0] and levels < MAX_HOLDER_PAIR_OFFSETS:
        dx = p[d:] - p[:-d]
        dv = np.abs(v[d:] - v[:-d])
        mask = dx <= 1.0
        if np.any(mask):
            best = max(best, float(np.max(dv[mask] / np.sqrt(dx[mask]))))
        d *= 2
        levels += 1
    return best


def record(state: MarkerField, compute_ux: bool = True) -> DiagRecord:
    """Measure one state; usable as the run recorder."""
    tracked = state.idx_x1 >= 0 and state.idx_x2 >= 0
    if tracked:
        x1 = state.x1
        x2 = state.x2
        ratio = x2 / x1
        log_ratio = math.log(ratio)
    else:
        x1 = x2 = ratio = log_ratio = math.nan
    if compute_ux:
        ux_sup = float(np.max(np.abs(hilbert_many(state, state.positions))))
    else:
        ux_sup = 0.0
    return DiagRecord(
        t=float(state.t),
        x1=x1,
        x2=x2,
        ratio=ratio,
        log_ratio=log_ratio,
        grad_sup=_grad_sup(state),
        support_D=state.support_radius(),
        ux_sup=ux_sup,
        holder_half=_holder_half(state),
    )


# ----------------------------------------------------------------------
# growth-model fits
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class FitResult:
    """Least-squares fit of a growth model on a time window.

    For Exponential, q(t) ~ C1 * exp(C2 * (t - window[0])); for
    DoubleExponential, q(t) ~ exp(C1 * exp(C2 * (t - window[0]))).  Both
    amplitudes are reported at the window start.
    """

    model: str
    params: tuple
    r_squared: float
    window: tuple


def fit_growth(series, quantity: str = "ratio", model: str = DOUBLE_EXPONENTIAL,
               window=None) -> FitResult:
    """Fit an exponential or double-exponential growth law to a series.

    The default window is the second half of the series by time.  Samples
    where the transformed quantity is undefined (q <= 0, or q <= e for the
    double-exponential) are dropped; fewer than 8 usable samples raise
    FitError.
    """
    if quantity not in FIT_QUANTITIES:
        raise ContractError(
            f"fit quantity must be one of {FIT_QUANTITIES}; got {quantity!r}")
    if model not in GROWTH_MODELS:
        raise ContractError(
            f"growth model must be one of {GROWTH_MODELS}; got {model!r}")
    if not series:
        raise FitError("cannot fit an empty series")
    t = np.array([r.t for r in series], dtype=np.float64)
    q = np.array([getattr(r, quantity) for r in series], dtype=np.float64)
    if window is None:
        t_lo = 0.5 * (t[0] + t[-1])
        t_hi = t[-1]
    else:
        t_lo, t_hi = float(window[0]), float(window[1])
    sel = (t >= t_lo - 1e-12) & (t <= t_hi + 1e-12) & np.isfinite(q)
    if model == DOUBLE_EXPONENTIAL:
        sel &= q > math.e
    else:
        sel &= q > 0.0
    ts = t[sel]
    qs = q[sel]
    if ts.size < 8:
        raise FitError(
            f"only {ts.size} usable samples in window [{t_lo:.6g}, {t_hi:.6g}]; need 8")
    x = ts - ts[0]
    y = np.log(np.log(qs)) if model == DOUBLE_EXPONENTIAL else np.log(qs)
    ybar = float(np.mean(y))
    ss_tot = float(np.sum((y - ybar) ** 2))
    if ss_tot < 1e-30:
        slope, intercept, r_squared = 0.0, ybar, 1.0
    else:
        slope, intercept = np.polyfit(x, y, 1)
        resid = y - (slope * x + intercept)
        r_squared = 1.0 - float(np.sum(resid ** 2)) / ss_tot
    return FitResult(
        model=model,
        params=(float(math.exp(intercept)), float(slope)),
        r_squared=float(r_squared),
        window=(float(ts[0]), float(ts[-1])),
    )


def log_ratio_rate(series):
    """d/dt of log_ratio at interior record times, from a three-point
    difference that is exact for quadratics on nonuniform grids."""
    t = np.array([r.t for r in series], dtype=np.float64)
    f = np.array([r.log_ratio for r in series], dtype=np.float64)
    if t.size < 3:
        raise ContractError("rate estimation needs at least three records")
    h0 = t[1:-1] - t[:-2]
    h1 = t[2:] - t[1:-1]
    num = h0 ** 2 * f[2:] + (h1 ** 2 - h0 ** 2) * f[1:-1] - h1 ** 2 * f[:-2]
    return t[1:-1], num / (h0 * h1 * (h0 + h1))


# ----------------------------------------------------------------------
# check plumbing
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class CheckLine:
    """One inequality instance: margin >= 0 means it holds exactly."""

    name: str
    t: float
    value: float
    bound: float
    margin: float
    passed: bool


@dataclass
class CheckReport:
    name: str
    lines: list
    passed: bool
    info: dict = dc_field(default_factory=dict)


def _line(name: str, t: float, value: float, bound: float, margin: float,
          tol: float) -> CheckLine:
    return CheckLine(name=name, t=float(t), value=float(value),
                     bound=float(bound), margin=float(margin),
                     passed=bool(margin >= -tol))


def _finish(name: str, lines, info) -> CheckReport:
    return CheckReport(name=name, lines=list(lines),
                       passed=all(l.passed for l in lines), info=dict(info))


# ----------------------------------------------------------------------
# rate decomposition for the log-kernel growth mechanism
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class LemmaDecomposition:
    """The corner-ratio growth rate split over four ranges of the source
    variable: near the inner corner, between the corners, near the outer
    corner, and beyond twice the outer corner."""

    t: float
    x1: float
    x2: float
    I: float
    II: float
    III: float
    IV: float
    bound_I: float
    bound_II: float
    bound_III: float
    bound_IV: float
    all_hold: bool

    @property
    def total(self) -> float:
        return self.I + self.II + self.III + self.IV


def _tail_kernel_mass(c: float, lo: float, hi: float) -> float:
    """Closed form of the integral over [lo, hi] of K(c/y)/y dy for the
    ratio kernel K, valid for 0 < c < lo <= hi.

    Antiderivative in y, written so that nothing cancels when c is many
    orders of magnitude below y: (y/c) log1p(2c/(y-c)) + log(y^2 - c^2).
    """
    def antideriv(y: float) -> float:
        return ((y / c) * math.log1p(2.0 * c / (y - c))
                + math.log((y - c) * (y + c)))
    return antideriv(hi) - antideriv(lo)


def _bound_iv(x1: float, x2: float) -> float:
    """Worst-case magnitude of the far piece: full kernel-difference mass on
    [2 x2, 1] against a unit-capped field."""
    if 2.0 * x2 >= 1.0:
        return 0.0
    return (_tail_kernel_mass(x2, 2.0 * x2, 1.0)
            - _tail_kernel_mass(x1, 2.0 * x2, 1.0))


def lemma_decomposition(state: MarkerField, tol: float = DEFAULT_BOUND_TOL,
                        quad_tol: float = 1e-9) -> LemmaDecomposition:
    """Split the instantaneous corner-ratio growth rate into four certified
    pieces.

    Requires an odd state with tracked corners satisfying x2 >= 8 x1,
    0 <= field <= 1 on the positive half line, and support inside [-1, 1].
    The pieces integrate (K(x1/y) - K(x2/y)) * field(y) / y over
    [0, 2 x1], [2 x1, x2/2], [x2/2, min(2 x2, 1)], and [min(2 x2, 1), 1].
    """
    state.require_odd("lemma_decomposition")
    x1 = state.x1
    x2 = state.x2
    if not (x1 > 0.0 and x2 > x1):
        raise HypothesisError(f"needs 0 < x1 < x2; got x1={x1:.6g}, x2={x2:.6g}")
    if x2 < 8.0 * x1:
        raise HypothesisError(
            f"decomposition needs x2 >= 8*x1; got x2/x1 = {x2 / x1:.6g}")
    if state.support_radius() > 1.0 + 1e-12:
        raise HypothesisError("decomposition needs support inside [-1, 1]")
    c = state.center_index
    half_v = state.values[c:]
    if np.min(half_v) < -1e-15 or np.max(half_v) > 1.0 + 1e-15:
        raise HypothesisError("decomposition needs 0 <= field <= 1 on x >= 0")

    pos = state.positions
    val = state.values
    nodes, _ = slope_jumps(pos, val)

    def integrand(y: float) -> float:
        if y <= 0.0 or y == x1 or y == x2:
            return 0.0
        w = float(np.interp(y, pos, val, left=0.0, right=0.0))
        if w == 0.0:
            return 0.0
        return (ratio_kernel(x1 / y) - ratio_kernel(x2 / y)) * w / y

    cuts = (0.0, 2.0 * x1, 0.5 * x2, min(2.0 * x2, 1.0), 1.0)
    splits = sorted(set(float(p) for p in nodes) | {x1, x2})
    pieces = [
        reference_integrate(integrand, a, b, tol=quad_tol, singular_points=splits)
        for a, b in zip(cuts[:-1], cuts[1:])
    ]
    part_i, part_ii, part_iii, part_iv = pieces

    bound_ii = BOUND_II_COEF * (math.log(x2 / x1) - math.log(4.0))
    bound_iv = _bound_iv(x1, x2)
    all_hold = (
        part_i >= -tol
        and part_i <= BOUND_I_CONST + tol
        and part_ii >= bound_ii - tol
        and part_iii >= BOUND_III_CONST - tol
        and abs(part_iv) <= bound_iv + tol
    )
    return LemmaDecomposition(
        t=float(state.t), x1=x1, x2=x2,
        I=part_i, II=part_ii, III=part_iii, IV=part_iv,
        bound_I=BOUND_I_CONST, bound_II=bound_ii,
        bound_III=BOUND_III_CONST, bound_IV=bound_iv,
        all_hold=bool(all_hold),
    )


def lemma_bounds_check(traj: Trajectory, tol: float = DEFAULT_BOUND_TOL,
                       rate_rel_tol: float = DEFAULT_RATE_REL_TOL) -> CheckReport:
    """Certify the decomposition bounds at every eligible snapshot and match
    the summed pieces against the observed d/dt of the log corner ratio.

    Eligible snapshots track both corners with x2 >= 8 x1.  The rate match
    uses a three-point difference, so it is checked at interior snapshots
    only.
    """
    snaps = traj.snapshots
    if not snaps:
        raise ContractError("trajectory has no snapshots")
    ts = np.array([s.t for s in snaps])
    log_ratios = np.array([math.log(s.x2 / s.x1) for s in snaps])
    lines = []
    decs: dict[int, LemmaDecomposition] = {}
    for k, snap in enumerate(snaps):
        if snap.x2 < 8.0 * snap.x1:
            continue
        d = lemma_decomposition(snap, tol=tol)
        decs[k] = d
        lines.append(_line("piece_I_nonnegative", d.t, d.I, 0.0, d.I, tol))
        lines.append(_line("piece_I_upper", d.t, d.I, d.bound_I, d.bound_I - d.I, tol))
        lines.append(_line("piece_II_lower", d.t, d.II, d.bound_II, d.II - d.bound_II, tol))
        lines.append(_line("piece_III_lower", d.t, d.III, d.bound_III,
                           d.III - d.bound_III, tol))
        lines.append(_line("piece_IV_magnitude", d.t, abs(d.IV), d.bound_IV,
                           d.bound_IV - abs(d.IV), tol))
    for k in range(1, len(snaps) - 1):
        if k not in decs:
            continue
        h0 = ts[k] - ts[k - 1]
        h1 = ts[k + 1] - ts[k]
        fd = (h0 ** 2 * log_ratios[k + 1] + (h1 ** 2 - h0 ** 2) * log_ratios[k]
              - h1 ** 2 * log_ratios[k - 1]) / (h0 * h1 * (h0 + h1))
        total = decs[k].total
        rel = abs(total - fd) / max(abs(fd), 1e-300)
        lines.append(_line("rate_consistency", ts[k], total, fd,
                           rate_rel_tol - rel, 0.0))
    info = {
        "snapshots_checked": len(decs),
        "termination": traj.termination,
        "rate_rel_tol": rate_rel_tol,
    }
    return _finish("growth_rate_decomposition", lines, info)


# ----------------------------------------------------------------------
# pinching-corner inequalities for the power-law model
# ----------------------------------------------------------------------

def patch_bounds(traj: Trajectory, gamma: float, M: float,
                 tol: float = 1e-8, decay_tol: float = 1e-3) -> CheckReport:
    """Certify the inward-pull and power-decay inequalities along a
    power-law-model run.

    At every snapshot with M x1 <= x2: the corner velocity satisfies
    u(x1) <= -C x1^(1-gamma) and the sharper four-term form of the same
    pull; along the whole run: x1^gamma decays at least linearly at rate
    C*gamma, x1 is strictly decreasing, corners stay separated, and the
    final time is within 10 percent of the predicted pinch deadline.
    """
    if not (0.0 < gamma < 1.0):
        raise ContractError(f"needs 0 < gamma < 1; got {gamma}")
    if not M >= 2.0:
        raise ContractError(f"needs separation factor M >= 2; got {M}")
    snaps = traj.snapshots
    if not snaps:
        raise ContractError("trajectory has no snapshots")
    law = VelocityLaw.alpha_patch(1.0 - gamma)
    cst = pinch_strength_constant(gamma)
    one_m_g = 1.0 - gamma
    t0 = snaps[0].t
    x1_0 = snaps[0].x1
    lines = []
    prev_x1 = None
    for snap in snaps:
        t = snap.t
        x1 = snap.x1
        x2 = snap.x2
        sep = x2 - M * x1
        lines.append(CheckLine("corner_separation", t, M * x1, x2, sep, sep > 0.0))
        if M * x1 <= x2:
            u1 = velocity(law, snap, x1)
            pull = -cst * x1 ** one_m_g
            lines.append(_line("corner_pull", t, u1, pull, pull - u1, tol))
            refined = ((3.0 * x1) ** one_m_g - x1 ** one_m_g
                       + (x2 - x1) ** one_m_g - (x2 + x1) ** one_m_g) / one_m_g
            lines.append(_line("corner_pull_refined", t, -u1, refined,
                               -u1 - refined, tol))
        decay_bound = x1_0 ** gamma - cst * gamma * (t - t0)
        lines.append(_line("power_decay", t, x1 ** gamma, decay_bound,
                           decay_bound - x1 ** gamma, decay_tol))
        if prev_x1 is not None:
            lines.append(CheckLine("pinch_monotone", t, x1, prev_x1,
                                   prev_x1 - x1, x1 < prev_x1))
        prev_x1 = x1
    deadline = pinch_time_bound(gamma, x1_0)
    t_last = snaps[-1].t
    lines.append(_line("pinch_time", t_last, t_last, 1.1 * deadline,
                       1.1 * deadline - t_last, 0.0))
    detected = traj.termination == BLOWUP_X1
    lines.append(CheckLine("pinch_detected", t_last, 1.0 if detected else 0.0,
                           1.0, 0.0 if detected else -1.0, detected))
    info = {
        "termination": traj.termination,
        "pinch_time_bound": deadline,
        "pinch_time_measured": t_last,
        "constant": cst,
    }
    return _finish("pinching_corner_bounds", lines, info)


# ----------------------------------------------------------------------
# support growth envelope
# ----------------------------------------------------------------------

def support_bound_check(series, tol: float = 1e-9) -> CheckReport:
    """Certify that the support radius grows no faster than
    C * D (|log D| + 1), discretely and against the integrated envelope.

    C is the larger of a worst-case floor and the rate observed over the
    first interval.  The envelope integrates w' = C (w + 1) for
    w = log max(D, 2) both in closed form and with a Runge-Kutta sweep; the
    two are compared as a consistency cross-check.
    """
    if not series:
        raise ContractError("empty series")
    t = np.array([r.t for r in series], dtype=np.float64)
    D = np.array([r.support_D for r in series], dtype=np.float64)
    calibration = 0.0
    if t.size >= 2 and D[0] > 0.0 and t[1] > t[0]:
        first_rate = (D[1] - D[0]) / (t[1] - t[0])
        calibration = max(0.0, first_rate / (D[0] * (abs(math.log(D[0])) + 1.0)))
    cst = max(SUPPORT_RATE_FLOOR, calibration)
    lines = []
    for k in range(t.size - 1):
        dt = t[k + 1] - t[k]
        rate = (D[k + 1] - D[k]) / dt
        if D[k] > 0.0:
            bound = cst * D[k] * (abs(math.log(D[k])) + 1.0)
        else:
            bound = 0.0
        lines.append(_line("support_growth_rate", t[k + 1], rate, bound,
                           bound - rate, tol))
    # Envelope in the log variable; never exponentiated, so it cannot
    # overflow.
    w0 = math.log(max(2.0, D[0]))
    w_closed = (w0 + 1.0) * np.exp(cst * (t - t[0])) - 1.0
    w_rk = np.empty_like(t)
    w_rk[0] = w0
    substeps = 32
    for k in range(t.size - 1):
        w = w_rk[k]
        h = (t[k + 1] - t[k]) / substeps
        for _ in range(substeps):
            k1 = cst * (w + 1.0)
            k2 = cst * (w + 0.5 * h * k1 + 1.0)
            k3 = cst * (w + 0.5 * h * k2 + 1.0)
            k4 = cst * (w + h * k3 + 1.0)
            w += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        w_rk[k + 1] = w
    for k in range(t.size):
        if D[k] <= 0.0:
            continue
        lines.append(_line("support_envelope", t[k], math.log(D[k]), w_rk[k],
                           w_rk[k] - math.log(D[k]), tol))
    info = {
        "constant": cst,
        "calibration": calibration,
        "floor": SUPPORT_RATE_FLOOR,
        "envelope_consistency": float(np.max(np.abs(w_rk - w_closed))),
    }
    return _finish("support_growth_bound", lines, info)


# ----------------------------------------------------------------------
# gradient-transform bound
# ----------------------------------------------------------------------

def _ux_rhs_unit(support_D: float, holder_half: float) -> float:
    log_term = abs(math.log(support_D)) if support_D > 0.0 else 0.0
    return 1.0 + log_term + math.log1p(holder_half)


def ux_calibration(state: MarkerField) -> float:
    """Constant for ux_bound_check: worst-case floor joined with the ratio
    observed on the given (typically initial) state."""
    rec = record(state)
    unit = _ux_rhs_unit(rec.support_D, rec.holder_half)
    observed = rec.ux_sup / unit if unit > 0.0 else 0.0
    return max(UX_CONST_FLOOR, observed)


def ux_bound_check(state: MarkerField, constant: float | None = None,
                   tol: float = 1e-9) -> CheckReport:
    """Certify sup|Hw| <= C (1 + |log D| + log(1 + Hölder-1/2 seminorm)).

    With constant=None the constant is calibrated on this same state, which
    is only useful at an initial time; for a series, calibrate once and pass
    the frozen constant.
    """
    cst = ux_calibration(state) if constant is None else float(constant)
    rec = record(state)
    bound = cst * _ux_rhs_unit(rec.support_D, rec.holder_half)
    line = _line("gradient_transform_bound", rec.t, rec.ux_sup, bound,
                 bound - rec.ux_sup, tol)
    return _finish("gradient_transform_bound", [line],
                   {"constant": cst, "support_D": rec.support_D,
                    "holder_half": rec.holder_half})


# ----------------------------------------------------------------------
# model discrimination
# ----------------------------------------------------------------------

def _series_degenerate(series, quantity: str) -> bool:
    q = np.array([getattr(r, quantity) for r in series], dtype=np.float64)
    if not np.all(np.isfinite(q)):
        return True
    spread = float(np.max(q) - np.min(q))
    return spread <= 1e-12 * max(1.0, float(np.max(np.abs(q))))


def growth_discrimination(euler_series, local_series) -> CheckReport:
    """Fit both growth models to the gradient sup of two runs over their
    common window; the log-kernel run must prefer double-exponential growth
    (positive fitted rate) and the local-law run must fit plain exponential
    growth at least as well as double-exponential."""
    if not euler_series or not local_series:
        raise ContractError("growth_discrimination needs two nonempty series")
    if _series_degenerate(euler_series, "grad_sup") or \
            _series_degenerate(local_series, "grad_sup"):
        return CheckReport("growth_discrimination", [], True,
                           {"degenerate": True})
    t_hi = min(euler_series[-1].t, local_series[-1].t)
    t_lo = 0.5 * (max(euler_series[0].t, local_series[0].t) + t_hi)
    window = (t_lo, t_hi)
    fits = {
        "euler_dexp": fit_growth(euler_series, "grad_sup", DOUBLE_EXPONENTIAL, window),
        "euler_exp": fit_growth(euler_series, "grad_sup", EXPONENTIAL, window),
        "local_dexp": fit_growth(local_series, "grad_sup", DOUBLE_EXPONENTIAL, window),
        "local_exp": fit_growth(local_series, "grad_sup", EXPONENTIAL, window),
    }
    lines = [
        _line("euler_double_exponential_rate", t_hi,
              fits["euler_dexp"].params[1], 0.0,
              fits["euler_dexp"].params[1], 0.0),
        _line("euler_double_exponential_fit", t_hi,
              fits["euler_dexp"].r_squared, 0.98,
              fits["euler_dexp"].r_squared - 0.98, 0.0),
        _line("local_exponential_preferred", t_hi,
              fits["local_exp"].r_squared, fits["local_dexp"].r_squared,
              fits["local_exp"].r_squared - fits["local_dexp"].r_squared, 0.0),
    ]
    info = {"window": window, "degenerate": False}
    info.update({k: (f.params, f.r_squared) for k, f in fits.items()})
    return _finish("growth_discrimination", lines, info)


def hyperbolic_approx_compare(profile: MarkerField, ctl: StepControl) -> CheckReport:
    """Run the log-kernel law and its hyperbolic-flow approximation on the
    same profile; both corner ratios must grow strictly and fit the
    double-exponential model, and the fitted rates are reported side by
    side."""
    if not np.any(profile.values != 0.0):
        return CheckReport("hyperbolic_approximation_compare", [], True,
                           {"degenerate": True})
    lines = []
    info: dict = {"degenerate": False}
    rates = {}
    for key, law in (("reference", VelocityLaw.odd_euler()),
                     ("approximation", VelocityLaw.hyperbolic_approx())):
        traj = run(profile, law, ctl, recorder=lambda s: record(s, compute_ux=False))
        series = traj.records
        ratios = np.array([r.ratio for r in series])
        min_gain = float(np.min(np.diff(ratios))) if ratios.size > 1 else math.nan
        lines.append(CheckLine(f"ratio_monotone_{key}", series[-1].t, min_gain,
                               0.0, min_gain, min_gain > 0.0))
        fit = fit_growth(series, "ratio", DOUBLE_EXPONENTIAL)
        lines.append(_line(f"double_exponential_fit_{key}", series[-1].t,
                           fit.r_squared, 0.98, fit.r_squared - 0.98, 0.0))
        rates[key] = fit.params[1]
        info[f"fit_{key}"] = (fit.params, fit.r_squared, fit.window)
        info[f"termination_{key}"] = traj.termination
        info[f"records_{key}"] = series
    info["rate_ratio"] = rates["approximation"] / rates["reference"]
    return _finish("hyperbolic_approximation_compare", lines, info)


# ----------------------------------------------------------------------
# exact transport invariants
# ----------------------------------------------------------------------

def invariant_suite(traj: Trajectory, law: VelocityLaw,
                    reference: MarkerField | None = None,
                    label: str = "transport_invariants") -> CheckReport:
    """Exact structural invariants of marker transport, one set of lines
    per snapshot.

    Transport moves markers but never changes their values, so these hold
    to the bit, not to a tolerance: odd symmetry, zero velocity at the
    origin, the value array equal to the initial one, conserved sup of the
    values, strictly increasing marker positions, and (when corners are
    tracked) the rising-ramp / plateau / falling-ramp shape.
    """
    snaps = traj.snapshots
    if not snaps:
        raise ContractError("trajectory has no snapshots")
    ref = snaps[0] if reference is None else reference
    v0 = ref.values
    amp0 = float(np.max(np.abs(v0)))
    origin = np.array([0.0], dtype=np.float64)
    lines = []
    for snap in snaps:
        t = snap.t
        pos = snap.positions
        val = snap.values

        if snap.is_odd():
            asym = 0.0
        else:
            asym = float(max(np.max(np.abs(pos + pos[::-1])),
                             np.max(np.abs(val + val[::-1]))))
        lines.append(CheckLine("odd_symmetry", t, asym, 0.0, -asym,
                               asym == 0.0))

        u0 = float(velocity_many(law, snap, origin)[0])
        lines.append(CheckLine("origin_velocity_zero", t, u0, 0.0, -abs(u0),
                               u0 == 0.0))

        if np.array_equal(val, v0):
            drift = 0.0
        else:
            drift = float(np.max(np.abs(val - v0)))
        lines.append(CheckLine("value_transport", t, drift, 0.0, -drift,
                               drift == 0.0))

        amp = float(np.max(np.abs(val)))
        lines.append(CheckLine("amplitude_conserved", t, amp, amp0,
                               -abs(amp - amp0), amp == amp0))

        gap = float(np.min(np.diff(pos)))
        lines.append(CheckLine("marker_ordering", t, gap, 0.0, gap,
                               gap > 0.0))

        if snap.idx_x1 >= 0 and snap.idx_x2 >= 0:
            c = snap.center_index
            i1, i2 = snap.idx_x1, snap.idx_x2
            rising = bool(np.all(np.diff(val[c:i1 + 1]) >= 0.0))
            flat = bool(np.all(val[i1:i2 + 1] == val[i1]))
            falling = bool(np.all(np.diff(val[i2:]) <= 0.0))
            ok = rising and flat and falling
            lines.append(CheckLine("plateau_structure", t,
                                   0.0 if ok else 1.0, 0.0,
                                   0.0 if ok else -1.0, ok))
    return _finish(label, lines, {"n_snapshots": len(snaps)})
