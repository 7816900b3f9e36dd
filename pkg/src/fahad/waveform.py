"""Pilots, line-of-sight sources and per-position noisy snapshots.

SNR is measured per sample at a single element before combining. Pilot rows are
orthonormal (S S^H = I), so each pilot sample carries power 1/Np and a unit-power
source at SNR ``s`` dB sits over noise of variance ``10**(-s/10) / Np``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import AnglePair, ArrayGeometry, Trajectory, steering_matrix


@dataclass(frozen=True)
class SourceSet:
    """Far-field sources: angle pairs with complex path gains."""

    angles: tuple
    gains: np.ndarray

    def __post_init__(self):
        angles = tuple(self.angles)
        gains = np.array(self.gains, dtype=complex).ravel()
        if len(angles) < 1:
            raise ValueError("at least one source is required")
        if gains.shape[0] != len(angles):
            raise ValueError(f"{len(angles)} angles but {gains.shape[0]} gains")
        if not np.all(np.isfinite(gains)):
            raise ValueError("gains must be finite")
        gains.setflags(write=False)
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "gains", gains)

    @property
    def count(self) -> int:
        return len(self.angles)

    @property
    def thetas(self) -> np.ndarray:
        return np.array([a.theta for a in self.angles])

    @property
    def phis(self) -> np.ndarray:
        return np.array([a.phi for a in self.angles])

    @classmethod
    def from_degrees(cls, pairs, gains=None) -> "SourceSet":
        angles = tuple(AnglePair.from_degrees(t, p) for t, p in pairs)
        return cls(angles, np.ones(len(angles)) if gains is None else gains)


@dataclass(frozen=True)
class PilotMatrix:
    """L x Np pilot block with orthonormal rows."""

    data: np.ndarray

    def __post_init__(self):
        s = np.array(self.data, dtype=complex)
        if s.ndim != 2 or s.shape[1] < s.shape[0]:
            raise ValueError(f"pilot matrix must be L x Np with Np >= L, got {s.shape}")
        if np.linalg.norm(s @ s.conj().T - np.eye(s.shape[0])) > 1e-10:
            raise ValueError("pilot rows are not orthonormal")
        s.setflags(write=False)
        object.__setattr__(self, "data", s)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def length(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class SnapshotBlock:
    """Raw N x Np array output at trajectory stop ``k``, before analog combining."""

    k: int
    data: np.ndarray


def make_pilots(n_sources: int, n_pilots: int) -> PilotMatrix:
    """First ``n_sources`` rows of the unitary ``n_pilots``-point DFT matrix."""
    if n_sources < 1 or n_pilots < n_sources:
        raise ValueError(f"need 1 <= L <= Np, got L={n_sources}, Np={n_pilots}")
    l = np.arange(n_sources)[:, None]
    n = np.arange(n_pilots)[None, :]
    return PilotMatrix(np.exp(-2j * np.pi * l * n / n_pilots) / np.sqrt(n_pilots))


def equivalent_signal(sources: SourceSet, pilots: PilotMatrix) -> np.ndarray:
    """Gain-weighted pilots: row l is gamma_l times pilot row l."""
    if pilots.rows != sources.count:
        raise ValueError(f"{sources.count} sources but {pilots.rows} pilot rows")
    return sources.gains[:, None] * pilots.data


def noise_var_from_snr(snr_db: float, n_pilots: int) -> float:
    """Per-entry noise variance for a unit-power source at ``snr_db`` per sample."""
    return 10.0 ** (-float(snr_db) / 10.0) / n_pilots


def snr_from_noise_var(noise_var: float, n_pilots: int) -> float:
    return -10.0 * np.log10(noise_var * n_pilots)


def complex_noise(rng: np.random.Generator, shape, noise_var: float) -> np.ndarray:
    """Circular complex Gaussian noise with per-entry variance ``noise_var``."""
    g = rng.standard_normal(tuple(shape) + (2,))
    return np.sqrt(noise_var / 2.0) * (g[..., 0] + 1j * g[..., 1])


def random_sources(
    rng: np.random.Generator,
    count: int,
    theta_range=(-np.pi / 2, np.pi / 2),
    phi_range=(-np.pi / 2, np.pi / 2),
) -> SourceSet:
    """Uniform angles over the given ranges with CN(0, 1) gains."""
    thetas = rng.uniform(*theta_range, size=count)
    phis = rng.uniform(*phi_range, size=count)
    gains = complex_noise(rng, (count,), 1.0)
    return SourceSet(tuple(AnglePair(t, p) for t, p in zip(thetas, phis)), gains)


def position_steering(geom: ArrayGeometry, traj: Trajectory, k: int, sources: SourceSet) -> np.ndarray:
    """N x L steering matrix of the array at trajectory stop ``k``."""
    coords = geom.elements + traj.displacements[k]
    return steering_matrix(coords, sources.thetas, sources.phis)


def snapshots_at_position(
    k: int,
    geom: ArrayGeometry,
    traj: Trajectory,
    sources: SourceSet,
    pilots: PilotMatrix,
    noise_var: float,
    rng: np.random.Generator | None,
) -> SnapshotBlock:
    """Array output at stop ``k``: A_k times the equivalent signal plus white noise."""
    if noise_var < 0:
        raise ValueError("noise variance must be nonnegative")
    clean = position_steering(geom, traj, k, sources) @ equivalent_signal(sources, pilots)
    if noise_var > 0:
        clean = clean + complex_noise(rng, clean.shape, noise_var)
    return SnapshotBlock(k, clean)
