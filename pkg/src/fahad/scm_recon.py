"""Virtual-array covariance reconstruction from scalar single-RF-chain measurements.

Every entry of each N x N block R_{k1,k2} is recovered from quadratic measurements
N * w^H R_{k1,k2} w. Diagonal entries use single-element selections. An off-diagonal
pair (n, m) then uses two two-element selections, one in phase and one with the
differential phase +alpha / -alpha. After the diagonals are subtracted, the pair
measurements give the 2x2 system

    c1 = R_nm + R_mn,    c2 = e^{-j2a} R_nm + e^{j2a} R_mn,

and its solution is

    R_nm = rho (c2 - e^{j2a} c1),    R_mn = rho (e^{-j2a} c1 - c2),

with rho = 1 / (e^{-j2a} - e^{j2a}). The system is singular when sin(2a) = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularPhaseConfig
from .frontend import Combiner, selection_combiner
from .geometry import ArrayGeometry, Trajectory, build_virtual_array, steering_matrix
from .numerics import hermitianize
from .streams import Stream, generator
from .waveform import PilotMatrix, SourceSet, complex_noise, equivalent_signal, position_steering, snapshots_at_position

SINGULAR_TOL = 1e-12


def rho(alpha: float) -> complex:
    """Pair-system coefficient 1 / (e^{-j2a} - e^{j2a}) = j / (2 sin 2a)."""
    s = np.sin(2.0 * alpha)
    if abs(s) < SINGULAR_TOL:
        raise SingularPhaseConfig(f"alpha={alpha!r} makes sin(2*alpha) vanish; the pair system is singular")
    return 1.0 / (np.exp(-2j * alpha) - np.exp(2j * alpha))


def exact_covariance(geom: ArrayGeometry, traj: Trajectory, sources: SourceSet, pilots: PilotMatrix,
                     noise_var: float) -> np.ndarray:
    """Virtual-array covariance A R_s A^H + sigma^2 I, position-major."""
    s_bar = equivalent_signal(sources, pilots)
    rs = s_bar @ s_bar.conj().T / pilots.length
    a = steering_matrix(build_virtual_array(geom, traj), sources.thetas, sources.phis)
    return a @ rs @ a.conj().T + noise_var * np.eye(a.shape[0])


class ExactOracle:
    """Noise-free expectation measurements N * w^H R_{k1,k2} w.

    Args:
        R: full (N*K) x (N*K) covariance, position-major.
        n_elements: N.
        injected_std: standard deviation of circular Gaussian noise added to each
            measurement, for conditioning studies.
        rng: generator for the injected noise.
    """

    mode = "exact"

    def __init__(self, R: np.ndarray, n_elements: int, injected_std: float = 0.0, rng=None):
        self.R = np.asarray(R)
        self.n = int(n_elements)
        if self.R.shape[0] % self.n:
            raise ValueError("covariance size is not a multiple of N")
        self.k = self.R.shape[0] // self.n
        self.injected_std = float(injected_std)
        self.rng = rng if rng is not None else np.random.default_rng(0)

    def block(self, k1: int, k2: int) -> np.ndarray:
        n = self.n
        return self.R[k1 * n:(k1 + 1) * n, k2 * n:(k2 + 1) * n]

    def measure_many(self, w: np.ndarray, k1: int, k2: int) -> np.ndarray:
        """One measurement per column of ``w`` (N x M)."""
        vals = self.n * np.einsum("im,ij,jm->m", w.conj(), self.block(k1, k2), w)
        if self.injected_std > 0:
            vals = vals + complex_noise(self.rng, vals.shape, self.injected_std ** 2)
        return vals

    def measure(self, w, k1: int, k2: int) -> complex:
        vec = w.vector if isinstance(w, Combiner) else np.asarray(w)
        return complex(self.measure_many(vec[:, None], k1, k2)[0])


class SampledOracle:
    """Finite-pilot measurements (N/Np) * (w^H Y_k1)(w^H Y_k2)^H.

    With ``blocks`` given, every measurement at stop k reuses the stored frame
    Upsilon_k, which reproduces the per-block sample covariance. With
    ``fresh_frames=True`` each measurement instead combines a new pilot frame with
    its own noise, as a physical front end repeating the pilot would see.
    """

    mode = "sampled"

    def __init__(self, blocks, n_pilots: int, fresh=None):
        self.blocks = [np.asarray(b.data if hasattr(b, "data") else b) for b in blocks]
        self.n = self.blocks[0].shape[0]
        self.k = len(self.blocks)
        self.n_pilots = int(n_pilots)
        self.fresh = fresh

    @classmethod
    def from_scene(cls, geom: ArrayGeometry, traj: Trajectory, sources: SourceSet, pilots: PilotMatrix,
                   noise_var: float, seed: int = 0, trial: int = 0, fresh_frames: bool = False) -> "SampledOracle":
        if fresh_frames:
            clean = [position_steering(geom, traj, k, sources) @ equivalent_signal(sources, pilots)
                     for k in range(traj.k)]
            fresh = {"clean": clean, "noise_var": noise_var,
                     "rng": generator(seed, trial, Stream.MEASUREMENT)}
            return cls(clean, pilots.length, fresh)
        blocks = [snapshots_at_position(k, geom, traj, sources, pilots, noise_var,
                                        generator(seed, trial, Stream.NOISE, k, 0))
                  for k in range(traj.k)]
        return cls(blocks, pilots.length)

    def _outputs(self, w, k):
        out = w.conj().T @ self.blocks[k]
        if self.fresh is not None and self.fresh["noise_var"] > 0:
            power = np.sum(np.abs(w) ** 2, axis=0)[:, None]
            g = self.fresh["rng"].standard_normal(out.shape + (2,))
            out = out + np.sqrt(self.fresh["noise_var"] * power / 2.0) * (g[..., 0] + 1j * g[..., 1])
        return out

    def measure_many(self, w: np.ndarray, k1: int, k2: int) -> np.ndarray:
        y1 = self._outputs(w, k1)
        y2 = y1 if k1 == k2 else self._outputs(w, k2)
        return self.n / self.n_pilots * np.einsum("mp,mp->m", y1, y2.conj())

    def measure(self, w, k1: int, k2: int) -> complex:
        vec = w.vector if isinstance(w, Combiner) else np.asarray(w)
        return complex(self.measure_many(vec[:, None], k1, k2)[0])


@dataclass(frozen=True)
class ReconstructedCovariance:
    R: np.ndarray
    alpha: float
    mode: str
    measurements: int


def reconstruct_diagonal(oracle, k1: int, k2: int, n: int) -> complex:
    """R_{k1,k2}(n, n) from the single-element selection b_n / sqrt(N)."""
    return oracle.measure(selection_combiner(oracle.n, [n]), k1, k2)


def reconstruct_pair(oracle, k1: int, k2: int, n: int, m: int, alpha: float,
                     diag_n: complex, diag_m: complex) -> tuple[complex, complex]:
    """(R_{k1,k2}(n, m), R_{k1,k2}(m, n)) from the in-phase and differential-phase pair."""
    if n == m:
        raise ValueError("pair indices must differ")
    r = rho(alpha)
    c1 = oracle.measure(selection_combiner(oracle.n, [n, m]), k1, k2) - diag_n - diag_m
    c2 = oracle.measure(selection_combiner(oracle.n, [n, m], [alpha, -alpha]), k1, k2) - diag_n - diag_m
    e2 = np.exp(2j * alpha)
    return complex(r * (c2 - e2 * c1)), complex(r * (c1 / e2 - c2))


def protocol_combiners(n: int, alpha: float):
    """All N^2 combining vectors of one block, as columns.

    Returns:
        (weights, pairs): weights is N x N^2 with the N diagonal selections first, then
        the in-phase pair vectors, then the differential-phase pair vectors, for pairs
        (n, m) with n < m listed in ``pairs``.
    """
    pairs = np.array([(a, b) for a in range(n) for b in range(a + 1, n)], dtype=int).reshape(-1, 2)
    p = pairs.shape[0]
    scale = 1.0 / np.sqrt(n)
    w = np.zeros((n, n + 2 * p), dtype=complex)
    w[np.arange(n), np.arange(n)] = scale
    cols = np.arange(p)
    w[pairs[:, 0], n + cols] = scale
    w[pairs[:, 1], n + cols] = scale
    w[pairs[:, 0], n + p + cols] = scale * np.exp(1j * alpha)
    w[pairs[:, 1], n + p + cols] = scale * np.exp(-1j * alpha)
    return w, pairs


def reconstruct_block(oracle, k1: int, k2: int, alpha: float, weights=None, pairs=None) -> np.ndarray:
    """Vectorized protocol for one N x N block; same arithmetic as the scalar path."""
    r = rho(alpha)
    n = oracle.n
    if weights is None:
        weights, pairs = protocol_combiners(n, alpha)
    meas = oracle.measure_many(weights, k1, k2)
    p = pairs.shape[0]
    diag = meas[:n]
    base = diag[pairs[:, 0]] + diag[pairs[:, 1]]
    c1 = meas[n:n + p] - base
    c2 = meas[n + p:] - base
    e2 = np.exp(2j * alpha)
    out = np.diag(diag)
    out[pairs[:, 0], pairs[:, 1]] = r * (c2 - e2 * c1)
    out[pairs[:, 1], pairs[:, 0]] = r * (c1 / e2 - c2)
    return out


def reconstruct_full(oracle, alpha: float, clip_negative: bool = False) -> ReconstructedCovariance:
    """Assemble every block, then symmetrize as (R + R^H) / 2.

    Args:
        oracle: ``ExactOracle`` or ``SampledOracle``.
        alpha: differential phase in radians.
        clip_negative: project onto the PSD cone by zeroing negative eigenvalues.

    Raises:
        SingularPhaseConfig: if sin(2 alpha) vanishes.
    """
    rho(alpha)
    n, k = oracle.n, oracle.k
    weights, pairs = protocol_combiners(n, alpha)
    full = np.empty((n * k, n * k), dtype=complex)
    for k1 in range(k):
        for k2 in range(k):
            full[k1 * n:(k1 + 1) * n, k2 * n:(k2 + 1) * n] = reconstruct_block(oracle, k1, k2, alpha, weights, pairs)
    full = hermitianize(full)
    if clip_negative:
        w, v = np.linalg.eigh(full)
        full = (v * np.maximum(w, 0.0)) @ v.conj().T
    return ReconstructedCovariance(full, float(alpha), oracle.mode, weights.shape[1] * k * k)


def sample_covariance(blocks) -> np.ndarray:
    """Direct virtual-array sample covariance of stacked per-position frames."""
    y = np.vstack([np.asarray(b.data if hasattr(b, "data") else b) for b in blocks])
    return y @ y.conj().T / y.shape[1]
