"""Two-sided Wiener paths, the stationary pathwise integrator, and noise shapes.

A path is stored as one immutable base record on a uniform lattice plus an
origin index.  The time shift

    (theta_s w)(t) = w(t + s) - w(s)

is realized by moving the origin, so shifted paths share the base record
and compositions of shifts are bit-exact: every evaluation subtracts the
same base entry.  This makes the flow property of the shift, and every
identity built on it downstream, hold to the last bit rather than to a
tolerance.

The stationary integrator for a component with decay rate mu is

    z(theta_t w) = -mu * integral_{-s_cut}^0 e^{mu s} (theta_t w)(s) ds

evaluated by the trapezoid rule on the path lattice.  The window s_cut is
chosen with mu * s_cut >= 40 so the discarded tail weight e^{-mu s_cut}
is below 4e-18, i.e. invisible at double precision.  In stationarity each
z is centered Gaussian with variance 1/(2 mu).

Spatial noise shapes g_j vanish at the origin and decay; their second
derivatives are carried analytically so the forcing term of the
transformed equation needs no numerical differentiation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, WindowExhaustedError
from .grid import Field, Grid

__all__ = [
    "WienerPath",
    "sample_wiener",
    "zero_wiener",
    "OUParams",
    "default_s_cut",
    "ou_value",
    "ou_vector",
    "ou_series",
    "sde_residual",
    "temperedness_diagnostic",
    "empirical_decay_bound",
    "ProfileSpec",
    "NoiseProfiles",
    "noise_field",
    "laplacian_noise_field",
]

_LATTICE_RTOL = 1e-9


@dataclass(frozen=True)
class WienerPath:
    """Sampled two-sided Wiener path, m components on a uniform lattice.

    Attributes
    ----------
    base_values : numpy.ndarray
        Shape (m, n) base record.  Never mutated; shifted paths share it.
    origin : int
        Index of the path's logical time zero within the base record.
    dt_knot : float
        Lattice spacing.
    """

    base_values: np.ndarray
    origin: int
    dt_knot: float

    def __post_init__(self) -> None:
        v = np.asarray(self.base_values, dtype=float)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 2:
            raise ParameterError(f"base_values must be (m, n>=2), got shape {v.shape}")
        if not (0 <= self.origin < v.shape[1]):
            raise ParameterError(f"origin {self.origin} outside base record")
        if not (np.isfinite(self.dt_knot) and self.dt_knot > 0):
            raise ParameterError(f"dt_knot must be positive, got {self.dt_knot!r}")
        object.__setattr__(self, "base_values", v)
        v.setflags(write=False)

    @property
    def m(self) -> int:
        return self.base_values.shape[0]

    @property
    def t_lo(self) -> float:
        return -self.origin * self.dt_knot

    @property
    def t_hi(self) -> float:
        return (self.base_values.shape[1] - 1 - self.origin) * self.dt_knot

    def index_of(self, t: float) -> int:
        """Base index of lattice time t; errors if off-lattice or outside."""
        k = t / self.dt_knot
        ki = int(round(k))
        if abs(k - ki) > 1e-6:
            raise ParameterError(f"time {t} is not on the path lattice (dt = {self.dt_knot})")
        idx = self.origin + ki
        if idx < 0 or idx >= self.base_values.shape[1]:
            raise WindowExhaustedError(
                f"time {t} outside sampled window [{self.t_lo}, {self.t_hi}]"
            )
        return idx

    def value(self, t: float) -> np.ndarray:
        """Path value w(t) - w(0); exact zero at t = 0."""
        idx = self.index_of(t)
        return self.base_values[:, idx] - self.base_values[:, self.origin]

    def shift(self, s: float) -> "WienerPath":
        """The shifted path theta_s w, sharing this path's base record."""
        idx = self.index_of(s)
        return WienerPath(self.base_values, idx, self.dt_knot)

    def times(self) -> np.ndarray:
        n = self.base_values.shape[1]
        return (np.arange(n) - self.origin) * self.dt_knot

    def knots(self) -> np.ndarray:
        """Materialized logical values over the whole window, (m, n)."""
        return self.base_values - self.base_values[:, self.origin][:, None]


def sample_wiener(m: int, t_lo: float, t_hi: float, dt_path: float, seed: int) -> WienerPath:
    """Sample an m-component two-sided Wiener path on [t_lo, t_hi].

    t_lo <= 0 <= t_hi and both must be lattice multiples of dt_path.  The
    two half-axes use independent increment blocks; the forward block is
    drawn first, so enlarging the backward window does not change the
    forward samples for a fixed seed.
    """
    if not (isinstance(m, (int, np.integer)) and m >= 1):
        raise ParameterError(f"m must be a positive integer, got {m!r}")
    if not (np.isfinite(dt_path) and dt_path > 0):
        raise ParameterError(f"dt_path must be positive, got {dt_path!r}")
    if not (t_lo <= 0.0 <= t_hi and t_hi > t_lo):
        raise ParameterError(f"window [{t_lo}, {t_hi}] must contain 0 with t_lo < t_hi")
    n_neg = -t_lo / dt_path
    n_pos = t_hi / dt_path
    if abs(n_neg - round(n_neg)) > 1e-6 or abs(n_pos - round(n_pos)) > 1e-6:
        raise ParameterError("t_lo and t_hi must be integer multiples of dt_path")
    n_neg, n_pos = int(round(n_neg)), int(round(n_pos))
    rng = np.random.default_rng(seed)
    root_dt = math.sqrt(dt_path)
    values = np.zeros((int(m), n_neg + n_pos + 1))
    if n_pos:
        fwd = rng.standard_normal((int(m), n_pos)) * root_dt
        values[:, n_neg + 1 :] = np.cumsum(fwd, axis=1)
    if n_neg:
        bwd = rng.standard_normal((int(m), n_neg)) * root_dt
        values[:, :n_neg] = np.cumsum(bwd, axis=1)[:, ::-1]
    return WienerPath(values, n_neg, dt_path)


def zero_wiener(m: int, t_lo: float, t_hi: float, dt_path: float) -> WienerPath:
    """Identically-zero path on the given window: the noise-free driver."""
    if not (isinstance(m, (int, np.integer)) and m >= 1):
        raise ParameterError(f"m must be a positive integer, got {m!r}")
    if not (np.isfinite(dt_path) and dt_path > 0):
        raise ParameterError(f"dt_path must be positive, got {dt_path!r}")
    n_neg = int(round(-t_lo / dt_path))
    n_pos = int(round(t_hi / dt_path))
    if n_neg < 0 or n_pos < 0 or n_neg + n_pos < 1:
        raise ParameterError(f"window [{t_lo}, {t_hi}] is invalid")
    return WienerPath(np.zeros((int(m), n_neg + n_pos + 1)), n_neg, dt_path)


@dataclass(frozen=True)
class OUParams:
    """Stationary integrator parameters: decay rate and history window."""

    mu: float
    s_cut: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.mu) and self.mu > 0):
            raise ParameterError(f"mu must be positive and finite, got {self.mu!r}")
        if not (np.isfinite(self.s_cut) and self.s_cut > 0):
            raise ParameterError(f"s_cut must be positive and finite, got {self.s_cut!r}")
        if self.mu * self.s_cut < 40.0 - 1e-9:
            raise ParameterError(
                f"mu * s_cut = {self.mu * self.s_cut:g} < 40; truncation tail not negligible"
            )


def default_s_cut(mu: float, dt_path: float) -> float:
    """Smallest lattice multiple of dt_path with mu * s_cut >= 40."""
    return math.ceil(40.0 / (mu * dt_path) - 1e-9) * dt_path


def _window_kernel(p: OUParams, dt: float) -> tuple[int, np.ndarray]:
    """Trapezoid weights times e^{mu s} on the history window lattice."""
    n_cut = int(math.ceil(p.s_cut / dt - 1e-9))
    s = -n_cut * dt + dt * np.arange(n_cut + 1)
    w = np.full(n_cut + 1, dt)
    w[0] *= 0.5
    w[-1] *= 0.5
    return n_cut, w * np.exp(p.mu * s)


def ou_vector(path: WienerPath, p: OUParams, t: float) -> np.ndarray:
    """All components of the stationary integrator at shift t, shape (m,)."""
    n_cut, ker = _window_kernel(p, path.dt_knot)
    i_t = path.index_of(t)
    if i_t - n_cut < 0:
        raise WindowExhaustedError(
            f"stationary evaluation at t = {t} needs {n_cut} lattice points of history"
        )
    seg = path.base_values[:, i_t - n_cut : i_t + 1] - path.base_values[:, i_t][:, None]
    return -p.mu * (seg @ ker)


def ou_value(path: WienerPath, p: OUParams, t: float, component: int = 0) -> float:
    """Single component of the stationary integrator at shift t."""
    if not (0 <= component < path.m):
        raise ParameterError(f"component {component} outside 0..{path.m - 1}")
    return float(ou_vector(path, p, t)[component])


def ou_series(path: WienerPath, p: OUParams, times: np.ndarray) -> np.ndarray:
    """Stationary integrator along many lattice times, shape (m, len(times)).

    Same trapezoid evaluation as :func:`ou_value`, vectorized with a
    sliding correlation; agrees with pointwise calls to roundoff.
    """
    times = np.asarray(times, dtype=float)
    n_cut, ker = _window_kernel(p, path.dt_knot)
    idx = np.array([path.index_of(t) for t in np.atleast_1d(times)])
    if idx.size and idx.min() - n_cut < 0:
        raise WindowExhaustedError("stationary series needs more history than the path window")
    ker_mass = float(np.sum(ker))
    out = np.empty((path.m, idx.size))
    for j in range(path.m):
        corr = np.correlate(path.base_values[j], ker, mode="valid")
        out[j] = -p.mu * (corr[idx - n_cut] - path.base_values[j, idx] * ker_mass)
    return out


def sde_residual(path: WienerPath, p: OUParams, t0: float, t1: float) -> float:
    """Integrated-equation defect of the stationary process over [t0, t1].

    The process satisfies z(t1) - z(t0) + mu * integral z dt = w(t1) - w(t0)
    exactly; evaluating the time integral by the trapezoid rule on the
    lattice leaves a defect that shrinks O(dt_knot).  Returns the largest
    defect magnitude across components.
    """
    n0 = int(round(t0 / path.dt_knot))
    n1 = int(round(t1 / path.dt_knot))
    if n1 <= n0:
        raise ParameterError(f"empty interval [{t0}, {t1}]")
    t = path.dt_knot * np.arange(n0, n1 + 1)
    z = ou_series(path, p, t)
    w = np.column_stack([path.value(ti) for ti in t])
    zint = np.trapezoid(z, dx=path.dt_knot, axis=1)
    defect = (z[:, -1] - z[:, 0]) + p.mu * zint - (w[:, -1] - w[:, 0])
    return float(np.max(np.abs(defect)))


def temperedness_diagnostic(
    path: WienerPath, p: OUParams, beta: float, horizon: float
) -> tuple[np.ndarray, np.ndarray]:
    """Series e^{-beta t} * sum_j z_j(theta_{-t} w)^2 on t in [0, horizon].

    A tempered driver sends this to zero for every beta > 0; the series is
    the direct observable for that decay along one path.
    """
    if not (np.isfinite(beta) and beta > 0):
        raise ParameterError(f"beta must be positive, got {beta!r}")
    n = int(round(horizon / path.dt_knot))
    if abs(n * path.dt_knot - horizon) > 1e-6 * max(1.0, abs(horizon)) or n < 0:
        raise ParameterError("horizon must be a nonnegative lattice multiple of dt_path")
    t = path.dt_knot * np.arange(n + 1)
    z = ou_series(path, p, -t)
    return t, np.exp(-beta * t) * np.sum(z * z, axis=0)


def empirical_decay_bound(
    path: WienerPath, p: OUParams, t_lo: float, t_hi: float = 0.0
) -> float:
    """Windowed growth constant r_hat = sup e^{-mu |t| / 2} sum_j z_j(theta_t)^2.

    By construction sum_j z_j(theta_t w)^2 <= e^{mu |t| / 2} * r_hat for
    every lattice t in the window, which is the form the pullback
    estimates consume.
    """
    n_lo = int(round(t_lo / path.dt_knot))
    n_hi = int(round(t_hi / path.dt_knot))
    if n_hi < n_lo:
        raise ParameterError(f"empty window [{t_lo}, {t_hi}]")
    t = path.dt_knot * np.arange(n_lo, n_hi + 1)
    z = ou_series(path, p, t)
    return float(np.max(np.exp(-p.mu * np.abs(t) / 2.0) * np.sum(z * z, axis=0)))


# -- spatial noise shapes --------------------------------------------------


_PROFILE_KINDS = ("x2exp", "xexp2", "sinbump")


@dataclass(frozen=True)
class ProfileSpec:
    """One noise shape: kind, amplitude, and (for sinbump) its span."""

    kind: str
    amplitude: float = 1.0
    span: float = 20.0

    def __post_init__(self) -> None:
        if self.kind not in _PROFILE_KINDS:
            raise ParameterError(f"unknown profile kind {self.kind!r}; choose from {_PROFILE_KINDS}")
        if not (np.isfinite(self.amplitude)):
            raise ParameterError(f"profile amplitude must be finite, got {self.amplitude!r}")
        if not (np.isfinite(self.span) and self.span > 0):
            raise ParameterError(f"profile span must be positive, got {self.span!r}")

    def values(self, x: np.ndarray) -> np.ndarray:
        a = self.amplitude
        if self.kind == "x2exp":
            return a * x * x * np.exp(-x)
        if self.kind == "xexp2":
            return a * x * np.exp(-x * x)
        k = np.pi / self.span
        return a * np.sin(k * x) * x * np.exp(-x)

    def second_derivative(self, x: np.ndarray) -> np.ndarray:
        a = self.amplitude
        if self.kind == "x2exp":
            return a * (x * x - 4.0 * x + 2.0) * np.exp(-x)
        if self.kind == "xexp2":
            return a * (4.0 * x ** 3 - 6.0 * x) * np.exp(-x * x)
        k = np.pi / self.span
        e = np.exp(-x)
        s, c = np.sin(k * x), np.cos(k * x)
        return a * (-k * k * s * x * e + 2.0 * k * c * (1.0 - x) * e + s * (x - 2.0) * e)


@dataclass(frozen=True)
class NoiseProfiles:
    """Ordered collection of noise shapes; one Wiener component each."""

    specs: tuple[ProfileSpec, ...]

    def __post_init__(self) -> None:
        if len(self.specs) < 1:
            raise ParameterError("at least one noise profile is required")

    @property
    def m(self) -> int:
        return len(self.specs)

    def values(self, x: np.ndarray) -> np.ndarray:
        return np.vstack([s.values(x) for s in self.specs])

    def second_derivatives(self, x: np.ndarray) -> np.ndarray:
        return np.vstack([s.second_derivative(x) for s in self.specs])

    def sup_rss(self, x: np.ndarray) -> float:
        """sup over x of the root-sum-square profile magnitude."""
        g = self.values(x)
        return float(np.sqrt(np.max(np.sum(g * g, axis=0))))

    def sup_rss_second(self, x: np.ndarray) -> float:
        g = self.second_derivatives(x)
        return float(np.sqrt(np.max(np.sum(g * g, axis=0))))


def _combine(profile_rows: np.ndarray, z: np.ndarray, grid: Grid) -> Field:
    z = np.asarray(z, dtype=float)
    if z.shape != (profile_rows.shape[0],):
        raise ParameterError(
            f"z has shape {z.shape}, expected ({profile_rows.shape[0]},) to match profiles"
        )
    return Field(grid, z @ profile_rows)


def noise_field(profiles: NoiseProfiles, z: np.ndarray, grid: Grid) -> Field:
    """Spatial noise field sum_j g_j(x) z_j; vanishes at x = 0."""
    return _combine(profiles.values(grid.nodes), z, grid)


def laplacian_noise_field(profiles: NoiseProfiles, z: np.ndarray, grid: Grid) -> Field:
    """Analytic Laplacian of the noise field, sum_j g_j''(x) z_j."""
    return _combine(profiles.second_derivatives(grid.nodes), z, grid)
