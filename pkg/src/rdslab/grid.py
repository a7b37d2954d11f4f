"""Spatial domain, sampled fields, and the norms used throughout.

The half-line is truncated to ``[0, L]`` and discretized by ``N + 1``
uniformly spaced nodes.  A :class:`Field` is a pointwise sample of a
bounded function on those nodes; between nodes the function is treated as
piecewise polynomial by the quadrature layer, never here.

Two norms matter.  The supremum norm is the plain max of absolute node
values.  The compact-open norm is the weighted series

    sum_{n >= 1} 2^{-n} * sup_{[0, min(n, L)]} |f|

truncated at ``n_max`` terms plus the tail bound ``2^{-n_max} * sup |f|``,
which upper-bounds every neglected term, so the truncated value is always
an upper bound for the full series and never exceeds ``sup |f|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

__all__ = [
    "Grid",
    "Field",
    "Segment",
    "make_grid",
    "sup_norm",
    "compact_open_norm",
    "segment_sup_norm",
    "segment_co_norm",
    "default_n_max",
]

# Relative slop for "this float is on the lattice" checks.
_LATTICE_RTOL = 1e-9


@dataclass(frozen=True)
class Grid:
    """Uniform mesh on [0, L].

    Attributes
    ----------
    length : float
        Right endpoint L of the truncated domain.
    n_cells : int
        Number of cells N; there are N + 1 nodes.
    dx : float
        Cell width L / N.
    nodes : numpy.ndarray
        Node coordinates, ``nodes[0] == 0`` and ``nodes[-1] == L`` exactly.
    """

    length: float
    n_cells: int
    dx: float
    nodes: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        self.nodes.setflags(write=False)

    def index_of(self, x: float) -> int:
        """Node index of a coordinate that must lie on the mesh."""
        i = int(round(x / self.dx))
        if i < 0 or i > self.n_cells or abs(i * self.dx - x) > _LATTICE_RTOL * max(1.0, self.length):
            raise ParameterError(f"x = {x} is not a node of the grid")
        return i


def make_grid(length: float, n_cells: int) -> Grid:
    """Build the uniform grid for the truncated domain.

    Parameters
    ----------
    length : float
        Domain size L > 0.
    n_cells : int
        Cell count N >= 1.
    """
    if not (isinstance(n_cells, (int, np.integer)) and n_cells >= 1):
        raise ParameterError(f"N must be a positive integer, got {n_cells!r}")
    if not (length > 0 and math.isfinite(length)):
        raise ParameterError(f"L must be positive and finite, got {length!r}")
    nodes = np.linspace(0.0, float(length), int(n_cells) + 1)
    return Grid(float(length), int(n_cells), float(length) / int(n_cells), nodes)


@dataclass(frozen=True)
class Field:
    """Node samples of a bounded function on the grid.

    Values must be finite.  Solution fields of the evolution problem
    vanish at x = 0 (the absorbing boundary); the solver enforces that on
    entry via :meth:`require_dirichlet`.  Diagnostic fields such as the
    constant 1 used to probe the dispersal operator carry no boundary
    constraint, so the constructor does not force one.
    """

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_cells + 1,):
            raise ParameterError(
                f"field values have shape {v.shape}, expected {(self.grid.n_cells + 1,)}"
            )
        if not np.all(np.isfinite(v)):
            raise ParameterError("field values must be finite")
        object.__setattr__(self, "values", v)
        v.setflags(write=False)

    @property
    def is_dirichlet(self) -> bool:
        return self.values[0] == 0.0

    def require_dirichlet(self, what: str = "field") -> "Field":
        if not self.is_dirichlet:
            raise ParameterError(f"{what} must vanish at x = 0, got {self.values[0]!r}")
        return self

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "Field":
        return cls(grid, np.asarray(fn(grid.nodes), dtype=float))

    @classmethod
    def zero(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.n_cells + 1))


def sup_norm(f: Field) -> float:
    """Supremum norm over the node samples."""
    return float(np.max(np.abs(f.values)))


def default_n_max(grid: Grid) -> int:
    """Default truncation depth for the compact-open norm: ceil(L)."""
    return max(1, int(math.ceil(grid.length)))


def compact_open_norm(f: Field, n_max: int | None = None) -> float:
    """Truncated weighted compact-open norm of a field.

    The result is an upper bound for the untruncated series and satisfies
    ``0 <= result <= sup_norm(f)``.

    Parameters
    ----------
    f : Field
    n_max : int, optional
        Number of series terms kept; defaults to ``ceil(L)``.
    """
    if n_max is None:
        n_max = default_n_max(f.grid)
    if not (isinstance(n_max, (int, np.integer)) and n_max >= 1):
        raise ParameterError(f"n_max must be a positive integer, got {n_max!r}")
    absv = np.abs(f.values)
    # Running sup over [0, x_i]; window sup for [0, min(n, L)] is a lookup.
    prefix = np.maximum.accumulate(absv)
    grid = f.grid
    total = 0.0
    for n in range(1, int(n_max) + 1):
        x_hi = min(float(n), grid.length)
        i = min(grid.n_cells, int(math.floor(x_hi / grid.dx + 1e-9)))
        total += 2.0 ** (-n) * prefix[i]
    total += 2.0 ** (-int(n_max)) * prefix[-1]
    return float(total)


@dataclass(frozen=True)
class Segment:
    """History segment: fields at times -tau, -tau + dt, ..., 0.

    Attributes
    ----------
    grid : Grid
    tau : float
        Delay span covered by the segment.
    dt : float
        Frame spacing; ``tau / dt`` must be an integer.
    values : numpy.ndarray
        Shape ``(tau/dt + 1, N + 1)``; row k samples time ``-tau + k*dt``.
    """

    grid: Grid
    tau: float
    dt: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ParameterError(f"tau must be positive, got {self.tau!r}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ParameterError(f"dt must be positive, got {self.dt!r}")
        m = self.tau / self.dt
        if abs(m - round(m)) > _LATTICE_RTOL * max(1.0, m):
            raise ParameterError(f"tau/dt = {m} is not an integer")
        v = np.asarray(self.values, dtype=float)
        want = (int(round(m)) + 1, self.grid.n_cells + 1)
        if v.shape != want:
            raise ParameterError(f"segment values have shape {v.shape}, expected {want}")
        if not np.all(np.isfinite(v)):
            raise ParameterError("segment values must be finite")
        object.__setattr__(self, "values", v)
        v.setflags(write=False)

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]

    def frame(self, k: int) -> Field:
        return Field(self.grid, self.values[k])

    def at(self, xi: float) -> Field:
        """Field at history offset xi in [-tau, 0] (must be on the frame lattice)."""
        k = (xi + self.tau) / self.dt
        ki = int(round(k))
        if ki < 0 or ki >= self.n_frames or abs(k - ki) > 1e-6:
            raise ParameterError(f"xi = {xi} is not a frame time of the segment")
        return self.frame(ki)

    def require_dirichlet(self, what: str = "segment") -> "Segment":
        if np.any(self.values[:, 0] != 0.0):
            raise ParameterError(f"{what} frames must vanish at x = 0")
        return self

    @classmethod
    def constant(cls, f: Field, tau: float, dt: float) -> "Segment":
        m = int(round(tau / dt))
        return cls(f.grid, tau, dt, np.tile(f.values, (m + 1, 1)))

    @classmethod
    def from_function(cls, grid: Grid, tau: float, dt: float, fn) -> "Segment":
        """Sample fn(xi, x) at every frame time and node."""
        m = int(round(tau / dt))
        xis = -tau + dt * np.arange(m + 1)
        rows = [np.asarray(fn(xi, grid.nodes), dtype=float) for xi in xis]
        return cls(grid, tau, dt, np.vstack(rows))


def segment_sup_norm(s: Segment) -> float:
    """Sup over frames of the field sup norm."""
    return float(np.max(np.abs(s.values)))


def segment_co_norm(s: Segment, n_max: int | None = None) -> float:
    """Sup over frames of the truncated compact-open norm."""
    return max(compact_open_norm(s.frame(k), n_max) for k in range(s.n_frames))
