"""Analog switch/phase combining and stacking of multi-position observations.

Stacked rows are tau-major: row ``tau * K + k`` holds the combined output of phase
configuration ``tau`` at trajectory stop ``k``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ArrayGeometry, Trajectory
from .streams import Stream, generator
from .waveform import PilotMatrix, SnapshotBlock, SourceSet, snapshots_at_position

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Combiner:
    """Binary switch mask plus per-element phase shifts feeding one RF chain."""

    switches: np.ndarray
    phases: np.ndarray

    def __post_init__(self):
        sw = np.array(self.switches, dtype=int).ravel()
        ph = np.mod(np.array(self.phases, dtype=float).ravel(), TWO_PI)
        if sw.shape != ph.shape or sw.size < 1:
            raise ValueError("switches and phases must be nonempty and equally long")
        if not np.all((sw == 0) | (sw == 1)):
            raise ValueError("switches must be 0 or 1")
        object.__setattr__(self, "switches", sw)
        object.__setattr__(self, "phases", ph)

    @property
    def n(self) -> int:
        return self.switches.size

    @property
    def vector(self) -> np.ndarray:
        return self.switches * np.exp(1j * self.phases) / np.sqrt(self.n)


@dataclass(frozen=True)
class MeasurementStack:
    """Stacked combined outputs Y and the block-diagonal combining matrix W.

    Attributes:
        Y: (K*T) x Np combined observations, tau-major rows.
        weights: T x K x N combining vectors, ``weights[tau, k]`` used at stop k.
    """

    Y: np.ndarray
    weights: np.ndarray

    @property
    def n_phases(self) -> int:
        return self.weights.shape[0]

    @property
    def n_positions(self) -> int:
        return self.weights.shape[1]

    @property
    def n_elements(self) -> int:
        return self.weights.shape[2]

    def row(self, k: int, tau: int) -> int:
        return tau * self.n_positions + k

    @property
    def W(self) -> np.ndarray:
        """(N*K) x (K*T) matrix whose column (k, tau) carries w_{k,tau} in block k."""
        t, kk, n = self.weights.shape
        w = np.zeros((kk * n, t * kk), dtype=complex)
        for tau in range(t):
            for k in range(kk):
                w[k * n:(k + 1) * n, tau * kk + k] = self.weights[tau, k]
        return w


def random_phase_combiner(rng: np.random.Generator, n: int) -> Combiner:
    """All switches on with i.i.d. U[0, 2pi) phases."""
    return Combiner(np.ones(n, dtype=int), rng.uniform(0.0, TWO_PI, size=n))


def selection_combiner(n: int, active_indices, phase_assignments=None) -> Combiner:
    """Switch on ``active_indices`` only, with the given phases (default 0)."""
    idx = [int(i) for i in active_indices]
    if len(set(idx)) != len(idx):
        raise ValueError("active indices must be distinct")
    if any(i < 0 or i >= n for i in idx):
        raise ValueError(f"active indices must lie in [0, {n})")
    phases_in = np.zeros(len(idx)) if phase_assignments is None else np.asarray(phase_assignments, float)
    if phases_in.shape != (len(idx),):
        raise ValueError("one phase per active index is required")
    switches = np.zeros(n, dtype=int)
    phases = np.zeros(n)
    switches[idx] = 1
    phases[idx] = phases_in
    return Combiner(switches, phases)


def apply_combiner(w: Combiner, block: SnapshotBlock) -> np.ndarray:
    """Combined output row w^H Upsilon_k."""
    data = np.asarray(block.data)
    if data.shape[0] != w.n:
        raise ValueError(f"combiner length {w.n} does not match {data.shape[0]} array rows")
    return w.vector.conj() @ data


def stack_observations(rows: dict, combiners: dict, n_positions: int, n_phases: int) -> MeasurementStack:
    """Assemble Y and W from outputs and combiners keyed by ``(k, tau)``."""
    missing = [(k, t) for t in range(n_phases) for k in range(n_positions)
               if (k, t) not in rows or (k, t) not in combiners]
    if missing:
        raise ValueError(f"missing (k, tau) entries: {missing[:5]}")
    y = np.array([rows[(k, t)] for t in range(n_phases) for k in range(n_positions)], dtype=complex)
    weights = np.array([[combiners[(k, t)].vector for k in range(n_positions)] for t in range(n_phases)])
    return MeasurementStack(y, weights)


def acquire(
    geom: ArrayGeometry,
    traj: Trajectory,
    sources: SourceSet,
    pilots: PilotMatrix,
    noise_var: float,
    n_phases: int,
    seed: int = 0,
    trial: int = 0,
) -> MeasurementStack:
    """Simulate the full random-phase acquisition over all stops and phase frames.

    Each (k, tau) frame is a fresh pilot transmission with its own noise draw and its
    own random phase combiner, drawn from independent seeded streams.
    """
    rows, combiners = {}, {}
    for k in range(traj.k):
        for tau in range(n_phases):
            block = snapshots_at_position(k, geom, traj, sources, pilots, noise_var,
                                          generator(seed, trial, Stream.NOISE, k, tau))
            comb = random_phase_combiner(generator(seed, trial, Stream.COMBINER, k, tau), geom.n)
            rows[(k, tau)] = apply_combiner(comb, block)
            combiners[(k, tau)] = comb
    return stack_observations(rows, combiners, traj.k, n_phases)
