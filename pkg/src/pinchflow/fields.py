"""Marker-based representation of a compactly supported scalar field.

A field is stored as ordered Lagrangian markers carrying fixed values; the
function is the piecewise-linear interpolant through the markers and zero
outside the outermost markers.  Time evolution moves marker positions only,
so the represented function is transported exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ContractError

__all__ = ["MarkerField"]


@dataclass
class MarkerField:
    """Ordered markers (position, value) plus tracked corner indices.

    ``idx_x1`` and ``idx_x2`` (or -1 when untracked) point at the markers
    started at the inner and outer plateau corners; those two particles are
    what the growth and blowup diagnostics follow.
    """

    positions: np.ndarray
    values: np.ndarray
    t: float = 0.0
    idx_x1: int = -1
    idx_x2: int = -1

    def __post_init__(self) -> None:
        self.positions = np.asarray(self.positions, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)

    # -- basic queries -------------------------------------------------

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def center_index(self) -> int:
        """Index of the origin marker for odd (mirror-symmetric) fields."""
        return self.n // 2

    @property
    def x1(self) -> float:
        if self.idx_x1 < 0:
            raise ContractError("field does not track an inner corner marker")
        return float(self.positions[self.idx_x1])

    @property
    def x2(self) -> float:
        if self.idx_x2 < 0:
            raise ContractError("field does not track an outer corner marker")
        return float(self.positions[self.idx_x2])

    def support_radius(self) -> float:
        """Largest |position| among markers with nonzero value (0 if none)."""
        nz = self.values != 0.0
        if not np.any(nz):
            return 0.0
        return float(np.max(np.abs(self.positions[nz])))

    # -- contracts -----------------------------------------------------

    def validate(self) -> None:
        p, v = self.positions, self.values
        if p.ndim != 1 or v.ndim != 1 or p.shape != v.shape:
            raise ContractError("positions and values must be 1-D arrays of equal length")
        if p.shape[0] < 2:
            raise ContractError("a marker field needs at least two markers")
        if not np.all(np.isfinite(p)) or not np.all(np.isfinite(v)):
            raise ContractError("marker arrays must be finite")
        if not np.all(np.diff(p) > 0.0):
            raise ContractError("marker positions must be strictly increasing")
        if not np.isfinite(self.t) or self.t < 0.0:
            raise ContractError("field time must be finite and nonnegative")
        for idx in (self.idx_x1, self.idx_x2):
            if idx != -1 and not (0 <= idx < p.shape[0]):
                raise ContractError("tracked marker index out of range")

    def is_odd(self) -> bool:
        """Exact mirror antisymmetry about a center marker at 0."""
        p, v = self.positions, self.values
        if p.shape[0] % 2 != 1:
            return False
        if p[self.center_index] != 0.0:
            return False
        return bool(
            np.array_equal(p, -p[::-1]) and np.array_equal(v, -v[::-1])
        )

    def require_odd(self, what: str) -> None:
        if not self.is_odd():
            raise ContractError(f"{what} requires an odd marker field")

    # -- evaluation ----------------------------------------------------

    def sample(self, x):
        """Piecewise-linear value at x (scalar or array); 0 outside support."""
        return np.interp(x, self.positions, self.values, left=0.0, right=0.0)

    # -- construction helpers -------------------------------------------

    def copy(self) -> "MarkerField":
        return replace(
            self,
            positions=self.positions.copy(),
            values=self.values.copy(),
        )

    def with_positions(self, positions: np.ndarray, t: float) -> "MarkerField":
        """Same values/tracking at new marker positions and time."""
        return MarkerField(
            positions=positions,
            values=self.values,
            t=t,
            idx_x1=self.idx_x1,
            idx_x2=self.idx_x2,
        )


def slope_jumps(positions: np.ndarray, values: np.ndarray):
    """Active nodes of the piecewise-linear field: (positions, slope jumps).

    The field must vanish at its first and last marker so that it extends
    continuously by zero; the returned jump at each node is the change of
    slope there (including the jump from/to the zero extension at the ends).
    Nodes with exactly zero jump are dropped, which keeps plateau interiors
    out of the kernel sums.
    """
    if values[0] != 0.0 or values[-1] != 0.0:
        raise ContractError("nodal kernel sums need a field vanishing at its end markers")
    b = np.diff(values) / np.diff(positions)
    jumps = np.empty(positions.shape[0], dtype=np.float64)
    jumps[0] = b[0]
    jumps[-1] = -b[-1]
    jumps[1:-1] = np.diff(b)
    keep = jumps != 0.0
    return positions[keep], jumps[keep]


def mirror_slope_jumps(field: MarkerField):
    """Active nodes on the positive half-line of an odd field.

    For an odd field the slope is even, so the origin never carries a jump
    and every negative node mirrors a positive one with opposite jump; the
    kernels consume only the positive nodes together with a mirror term.
    """
    c = field.center_index
    p = field.positions[c:]
    v = field.values[c:]
    if v[-1] != 0.0:
        raise ContractError("nodal kernel sums need a field vanishing at its end markers")
    b = np.diff(v) / np.diff(p)
    jumps = np.empty(p.shape[0], dtype=np.float64)
    jumps[0] = 0.0
    jumps[-1] = -b[-1]
    jumps[1:-1] = np.diff(b)
    keep = jumps != 0.0
    return p[keep], jumps[keep]
