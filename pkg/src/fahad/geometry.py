"""Fluid-antenna array layout, coordinated trajectory, virtual aperture and steering math.

All lengths are in wavelengths (lambda = 1) and all angles in radians. The plane-wave
phase at a point (x, y) for azimuth theta and elevation phi is

    2*pi * (x * sin(theta) * cos(phi) + y * sin(theta) * sin(phi)).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi
HALF_PI = 0.5 * np.pi


def _as_coords(values, name):
    arr = np.array(values, dtype=float)
    if arr.ndim == 1 and arr.size == 2:
        arr = arr.reshape(1, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"{name} must be a sequence of (x, y) pairs, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite coordinates")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ArrayGeometry:
    """Element positions of the array at its initial location."""

    elements: np.ndarray

    def __post_init__(self):
        arr = _as_coords(self.elements, "elements")
        if arr.shape[0] < 1:
            raise ValueError("an array needs at least one element")
        if np.unique(arr, axis=0).shape[0] != arr.shape[0]:
            raise ValueError("element positions must be pairwise distinct")
        object.__setattr__(self, "elements", arr)

    @property
    def n(self) -> int:
        return self.elements.shape[0]

    @classmethod
    def ula(cls, n: int, spacing: float = 0.5, axis: str = "y") -> "ArrayGeometry":
        """Uniform linear array starting at the origin."""
        pos = spacing * np.arange(n, dtype=float)
        zeros = np.zeros(n)
        if axis == "y":
            return cls(np.column_stack([zeros, pos]))
        if axis == "x":
            return cls(np.column_stack([pos, zeros]))
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")

    @classmethod
    def upa(cls, nx: int, ny: int, spacing: float = 0.5, origin=(0.0, 0.0)) -> "ArrayGeometry":
        """Uniform planar array, x-major ordering."""
        xs = origin[0] + spacing * np.arange(nx)
        ys = origin[1] + spacing * np.arange(ny)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        return cls(np.column_stack([gx.ravel(), gy.ravel()]))


@dataclass(frozen=True)
class Trajectory:
    """Joint displacements of the whole array; the first stop is the initial position."""

    displacements: np.ndarray

    def __post_init__(self):
        arr = _as_coords(self.displacements, "displacements")
        if arr.shape[0] < 1:
            raise ValueError("a trajectory needs at least one stop")
        if np.any(arr[0] != 0.0):
            raise ValueError("the first displacement must be exactly (0, 0)")
        object.__setattr__(self, "displacements", arr)

    @property
    def k(self) -> int:
        return self.displacements.shape[0]

    @classmethod
    def stationary(cls) -> "Trajectory":
        return cls(np.zeros((1, 2)))


@dataclass(frozen=True)
class VirtualArray:
    """The N*K-element aperture swept by the array over its trajectory.

    Coordinates are position-major: index ``k * N + n`` is element ``n`` at stop ``k``.
    ``base`` and ``offsets`` keep the factorization so steering vectors can be built
    with N + K exponentials per direction instead of N * K.
    """

    base: np.ndarray
    offsets: np.ndarray
    coords: np.ndarray = field(init=False)

    def __post_init__(self):
        base = _as_coords(self.base, "base")
        offsets = _as_coords(self.offsets, "offsets")
        coords = (offsets[:, None, :] + base[None, :, :]).reshape(-1, 2)
        coords.setflags(write=False)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "coords", coords)

    @property
    def n_elements(self) -> int:
        return self.base.shape[0]

    @property
    def n_positions(self) -> int:
        return self.offsets.shape[0]

    @property
    def size(self) -> int:
        return self.coords.shape[0]

    def index(self, n: int, k: int) -> int:
        return k * self.n_elements + n

    @classmethod
    def from_coords(cls, coords) -> "VirtualArray":
        """Wrap an arbitrary coordinate list (one element per stop)."""
        return cls(np.zeros((1, 2)), coords)


@dataclass(frozen=True)
class AnglePair:
    """Azimuth ``theta`` and elevation ``phi`` in radians, both within [-pi/2, pi/2]."""

    theta: float
    phi: float

    def __post_init__(self):
        for name in ("theta", "phi"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or abs(v) > HALF_PI + 1e-12:
                raise ValueError(f"{name}={v} outside [-pi/2, pi/2]")
            object.__setattr__(self, name, v)

    @classmethod
    def from_degrees(cls, theta_deg: float, phi_deg: float) -> "AnglePair":
        return cls(np.deg2rad(theta_deg), np.deg2rad(phi_deg))

    def degrees(self) -> tuple[float, float]:
        return float(np.rad2deg(self.theta)), float(np.rad2deg(self.phi))


def build_virtual_array(geom: ArrayGeometry, traj: Trajectory) -> VirtualArray:
    return VirtualArray(geom.elements, traj.displacements)


def random_trajectory(
    rng_seed,
    k: int,
    step_min: float = 0.15,
    step_max: float = 0.45,
    axis: str = "x",
) -> Trajectory:
    """Seeded random walk with i.i.d. uniform step sizes.

    Steps are drawn in one batch, so a longer trajectory from the same seed extends a
    shorter one: the first K stops do not depend on how many follow.

    Args:
        rng_seed: integer seed, ``SeedSequence`` or an existing ``Generator``.
        k: number of stops, including the initial position.
        step_min, step_max: step range in wavelengths.
        axis: ``"x"``, ``"y"`` or ``"both"`` (independent x and y steps).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not (0.0 < step_min <= step_max) or not np.isfinite(step_max):
        raise ValueError(f"invalid step range [{step_min}, {step_max}]")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    disp = np.zeros((k, 2))
    if k == 1:
        return Trajectory(disp)
    if axis == "both":
        steps = rng.uniform(step_min, step_max, size=(k - 1, 2))
        disp[1:] = np.cumsum(steps, axis=0)
    elif axis in ("x", "y"):
        steps = rng.uniform(step_min, step_max, size=k - 1)
        disp[1:, 0 if axis == "x" else 1] = np.cumsum(steps)
    else:
        raise ValueError(f"axis must be 'x', 'y' or 'both', got {axis!r}")
    return Trajectory(disp)


def direction_cosines(theta, phi):
    """(sin(theta)cos(phi), sin(theta)sin(phi)), broadcast over array inputs."""
    st = np.sin(theta)
    return st * np.cos(phi), st * np.sin(phi)


def _coords_of(obj) -> np.ndarray:
    if isinstance(obj, VirtualArray):
        return obj.coords
    if isinstance(obj, ArrayGeometry):
        return obj.elements
    return _as_coords(obj, "coords")


def steering_vector(coords, angle: AnglePair) -> np.ndarray:
    xy = _coords_of(coords)
    u, v = direction_cosines(angle.theta, angle.phi)
    return np.exp(1j * TWO_PI * (xy[:, 0] * u + xy[:, 1] * v))


def steering_matrix(coords, thetas, phis) -> np.ndarray:
    """Steering vectors for paired angle arrays, one column per (theta, phi) pair.

    A ``VirtualArray`` is evaluated through its base/offset factorization, which is
    exact: the phase at ``base[n] + offset[k]`` is the sum of the two phases.
    """
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    u, v = direction_cosines(thetas, phis)
    if isinstance(coords, VirtualArray) and coords.n_elements > 1 and coords.n_positions > 1:
        e0 = np.exp(1j * TWO_PI * (np.outer(coords.base[:, 0], u) + np.outer(coords.base[:, 1], v)))
        psi = np.exp(1j * TWO_PI * (np.outer(coords.offsets[:, 0], u) + np.outer(coords.offsets[:, 1], v)))
        return (psi[:, None, :] * e0[None, :, :]).reshape(-1, u.size)
    xy = _coords_of(coords)
    xs, ix = np.unique(xy[:, 0], return_inverse=True)
    ys, iy = np.unique(xy[:, 1], return_inverse=True)
    if xs.size + ys.size < xy.shape[0]:
        # separable layout (e.g. a planar grid): one exponential per distinct x and y
        ex = np.exp(1j * TWO_PI * np.outer(xs, u))
        ey = np.exp(1j * TWO_PI * np.outer(ys, v))
        if xs.size * ys.size == xy.shape[0] and np.array_equal(ix * ys.size + iy, np.arange(xy.shape[0])):
            return (ex[:, None, :] * ey[None, :, :]).reshape(xy.shape[0], -1)
        return ex[ix] * ey[iy]
    return np.exp(1j * TWO_PI * (np.outer(xy[:, 0], u) + np.outer(xy[:, 1], v)))


def steering_derivatives(coords, angle: AnglePair) -> tuple[np.ndarray, np.ndarray]:
    """Partial derivatives of the steering vector with respect to theta and phi."""
    xy = _coords_of(coords)
    a = steering_vector(xy, angle)
    cp, sp = np.cos(angle.phi), np.sin(angle.phi)
    d_bar = xy[:, 0] * cp + xy[:, 1] * sp
    d_tilde = -xy[:, 0] * sp + xy[:, 1] * cp
    da_dtheta = 1j * TWO_PI * np.cos(angle.theta) * d_bar * a
    da_dphi = 1j * TWO_PI * np.sin(angle.theta) * d_tilde * a
    return da_dtheta, da_dphi


def projected_apertures(coords, phi: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-element apertures along and across the elevation direction ``phi``."""
    xy = _coords_of(coords)
    cp, sp = np.cos(phi), np.sin(phi)
    return xy[:, 0] * cp + xy[:, 1] * sp, -xy[:, 0] * sp + xy[:, 1] * cp
