"""Reference acquisition modes and estimators used for comparison.

* fd-upa: a fully digital half-wavelength planar array covering the same footprint
  as the moving array, with conventional exhaustive 2-D MUSIC.
* fdfa: the moving array with one RF chain per element, so the virtual-array sample
  covariance is observed directly and fed to the reduced-dimension estimator.
* sfa: a single moving antenna that visits every virtual element position in turn.
* fa-had: the proposed single-RF-chain moving array.
"""

from __future__ import annotations

from dataclasses import dataclass
from time import perf_counter

import numpy as np

from .fast_music import AngleEstimateSet, SearchGrid, music_2d
from .geometry import ArrayGeometry, Trajectory, VirtualArray, build_virtual_array
from .jad_music import JadGrid, jad_rd_music
from .scm_recon import sample_covariance
from .streams import Stream, generator
from .waveform import PilotMatrix, SourceSet, snapshots_at_position

FD_EXHAUSTIVE_STEP = 0.1


@dataclass(frozen=True)
class AcquisitionMode:
    """Hardware and overhead accounting of one architecture.

    Attributes:
        tag: one of ``fd-upa``, ``fdfa``, ``sfa``, ``fa-had``.
        antennas, rf_chains, adjustments, pilots: counts per acquisition.
        geometry, trajectory: the layout that realizes the mode.
    """

    tag: str
    antennas: int
    rf_chains: int
    adjustments: int
    pilots: int
    geometry: ArrayGeometry
    trajectory: Trajectory

    @property
    def virtual(self) -> VirtualArray:
        return build_virtual_array(self.geometry, self.trajectory)


def fa_had_mode(geom: ArrayGeometry, traj: Trajectory, n_phases: int) -> AcquisitionMode:
    if not 1 <= n_phases < geom.n:
        raise ValueError(f"the single-chain mode needs 1 <= T < N, got T={n_phases}, N={geom.n}")
    return AcquisitionMode("fa-had", geom.n, 1, traj.k, n_phases * traj.k, geom, traj)


def fdfa_mode(geom: ArrayGeometry, traj: Trajectory) -> AcquisitionMode:
    return AcquisitionMode("fdfa", geom.n, geom.n, traj.k, traj.k, geom, traj)


def sfa_mode(geom: ArrayGeometry, traj: Trajectory) -> AcquisitionMode:
    """One antenna whose trajectory visits every virtual element position in order."""
    coords = build_virtual_array(geom, traj).coords
    single = ArrayGeometry(coords[:1])
    stops = Trajectory(coords - coords[0])
    nk = coords.shape[0]
    return AcquisitionMode("sfa", 1, 1, nk, nk, single, stops)


def upa_for_footprint(geom: ArrayGeometry, traj: Trajectory, spacing: float = 0.5) -> ArrayGeometry:
    """Densest half-wavelength UPA that fits the bounding box of the swept aperture."""
    coords = build_virtual_array(geom, traj).coords
    lo, hi = coords.min(axis=0), coords.max(axis=0)
    nx, ny = (np.floor((hi - lo) / spacing + 1e-9).astype(int) + 1)
    return ArrayGeometry.upa(int(nx), int(ny), spacing, origin=tuple(lo))


def fd_upa_mode(geom: ArrayGeometry, traj: Trajectory) -> AcquisitionMode:
    upa = upa_for_footprint(geom, traj)
    return AcquisitionMode("fd-upa", upa.n, upa.n, 0, 1, upa, Trajectory.stationary())


def accounting_table(n_elements: int, n_positions: int, n_phases: int) -> list[dict]:
    """Antenna, RF chain, adjustment and pilot counts for the moving-array architectures."""
    geom = ArrayGeometry.ula(n_elements)
    traj = Trajectory(np.column_stack([0.3 * np.arange(n_positions), np.zeros(n_positions)]))
    rows = []
    for mode, label in ((sfa_mode(geom, traj), "Single FA"),
                        (fdfa_mode(geom, traj), "Fully digital FA array"),
                        (fa_had_mode(geom, traj, n_phases), "FA-HAD")):
        rows.append({"architecture": label, "tag": mode.tag, "antennas": mode.antennas,
                     "rf_chains": mode.rf_chains, "adjustments": mode.adjustments, "pilots": mode.pilots})
    return rows


def upa_snapshots(upa: ArrayGeometry, sources: SourceSet, pilots: PilotMatrix, noise_var: float,
                  seed: int = 0, trial: int = 0) -> np.ndarray:
    block = snapshots_at_position(0, upa, Trajectory.stationary(), sources, pilots, noise_var,
                                  generator(seed, trial, Stream.UPA_NOISE))
    return block.data


def fd_2d_music(snapshots: np.ndarray, upa: ArrayGeometry, n_sources: int, grid: SearchGrid | None = None,
                step: float = FD_EXHAUSTIVE_STEP, timings: dict | None = None) -> AngleEstimateSet:
    """Sample covariance, EVD and an exhaustive single-stage 2-D MUSIC search."""
    t0 = perf_counter()
    r = snapshots @ snapshots.conj().T / snapshots.shape[1]
    t1 = perf_counter()
    est = music_2d(r, upa, n_sources, grid, exhaustive_step=step, timings=timings)
    if timings is not None:
        timings["covariance"] = t1 - t0
    return est


def fdfa_music(blocks, virt: VirtualArray, n_sources: int, eps: float = 1e-3,
               grid: JadGrid | None = None, timings: dict | None = None) -> AngleEstimateSet:
    """Reduced-dimension MUSIC on the directly observed virtual sample covariance."""
    t0 = perf_counter()
    r = sample_covariance(blocks)
    t1 = perf_counter()
    est = jad_rd_music(r, virt, n_sources, eps, grid=grid, timings=timings)
    if timings is not None:
        timings["covariance"] = t1 - t0
    return est


def sfa_blocks(mode: AcquisitionMode, sources: SourceSet, pilots: PilotMatrix, noise_var: float,
               seed: int = 0, trial: int = 0) -> list:
    """One 1 x Np frame per stop of a single-antenna mode, each with fresh noise."""
    return [snapshots_at_position(k, mode.geometry, mode.trajectory, sources, pilots, noise_var,
                                  generator(seed, trial, Stream.SFA_NOISE, k))
            for k in range(mode.trajectory.k)]
