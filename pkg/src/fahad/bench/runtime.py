"""Median runtime of the three estimators, split into covariance, EVD and search stages."""

from __future__ import annotations

from dataclasses import dataclass
from time import perf_counter

import numpy as np

from ..baselines import fd_2d_music, upa_for_footprint, upa_snapshots
from ..fast_music import fa_had_music
from ..frontend import acquire
from ..jad_music import jad_rd_music
from ..scm_recon import SampledOracle, reconstruct_full
from ..waveform import noise_var_from_snr
from .config import ExperimentConfig
from .montecarlo import build_scene, fmt, jad_grid, search_grid

RUNTIME_METHODS = ("fa-had-music", "jad-rd-music", "fd-2d-music")
MIN_REPS = 11
# Published medians (seconds) for the same three methods, reported next to ours only.
REFERENCE_RUNTIME_S = {"fa-had-music": 0.5300, "jad-rd-music": 1.3491, "fd-2d-music": 3.7737}
STAGES = ("covariance", "evd", "search")


def _prepare(method: str, cfg: ExperimentConfig, trial: int):
    """Acquire the data for one method; returns a callable running the estimator."""
    scene = build_scene(cfg, trial)
    nv = noise_var_from_snr(cfg.snr_db[0], cfg.n_pilots)
    geom, traj, virt, src, pil = scene.geometry, scene.trajectory, scene.virtual, scene.sources, scene.pilots
    if method == "fa-had-music":
        stack = acquire(geom, traj, src, pil, nv, cfg.n_phases, cfg.seed, trial)
        return lambda t: fa_had_music(stack, virt, cfg.n_sources, grid=search_grid(cfg), timings=t)
    if method == "jad-rd-music":
        oracle = SampledOracle.from_scene(geom, traj, src, pil, nv, cfg.seed, trial, cfg.fresh_frames)

        def run(t):
            t0 = perf_counter()
            r_hat = reconstruct_full(oracle, cfg.alpha).R
            t["covariance"] = perf_counter() - t0
            return jad_rd_music(r_hat, virt, cfg.n_sources, cfg.eps, grid=jad_grid(cfg), pinv_tol=cfg.pinv_tol,
                                timings=t)
        return run
    if method == "fd-2d-music":
        upa = upa_for_footprint(geom, traj)
        snaps = upa_snapshots(upa, src, pil, nv, cfg.seed, trial)
        return lambda t: fd_2d_music(snaps, upa, cfg.n_sources, search_grid(cfg), cfg.grid.fd_step, timings=t)
    raise ValueError(f"no runtime harness for {method!r}")


def _stages(t: dict) -> dict:
    return {"covariance": t.get("covariance", 0.0), "evd": t.get("evd", 0.0),
            "search": t.get("search", 0.0) + t.get("elevation", 0.0) + t.get("azimuth", 0.0)}


@dataclass(frozen=True)
class MethodTiming:
    """Per-repetition wall-clock totals and stage durations for one method."""

    method: str
    totals: np.ndarray
    stages: dict

    @property
    def median(self) -> float:
        return float(np.median(self.totals))

    def stage_medians(self) -> dict:
        return {k: float(np.median(v)) for k, v in self.stages.items()}

    @property
    def stage_sum_ratio(self) -> float:
        """Median over reps of (sum of stages) / total."""
        sums = sum(np.asarray(v) for v in self.stages.values())
        return float(np.median(sums / self.totals))


@dataclass(frozen=True)
class RuntimeReport:
    timings: dict

    @property
    def medians(self) -> dict:
        return {m: t.median for m, t in self.timings.items()}

    def ordered(self, methods=RUNTIME_METHODS) -> bool:
        med = [self.medians[m] for m in methods]
        return all(a < b for a, b in zip(med, med[1:]))

    def rows(self) -> list[dict]:
        out = []
        for m, t in self.timings.items():
            st = t.stage_medians()
            out.append({"method": m, "median_runtime_s": fmt(t.median), "reps": str(t.totals.size),
                        "covariance_s": fmt(st["covariance"]), "evd_s": fmt(st["evd"]), "search_s": fmt(st["search"]),
                        "reference_s": fmt(REFERENCE_RUNTIME_S.get(m))})
        return out


RUNTIME_COLUMNS = ("method", "median_runtime_s", "reps", "covariance_s", "evd_s", "search_s", "reference_s")


def runtime_bench(cfg: ExperimentConfig, reps: int = MIN_REPS, methods=RUNTIME_METHODS, trial: int = 0) -> RuntimeReport:
    """Time each method ``reps`` times on the same acquired data (acquisition excluded).

    Raises:
        ValueError: if ``reps`` is below the minimum of 11.
    """
    if reps < MIN_REPS:
        raise ValueError(f"need at least {MIN_REPS} repetitions, got {reps}")
    out = {}
    for method in methods:
        run = _prepare(method, cfg, trial)
        run({})
        totals, stages = [], {s: [] for s in STAGES}
        for _ in range(reps):
            t = {}
            t0 = perf_counter()
            run(t)
            totals.append(perf_counter() - t0)
            for k, v in _stages(t).items():
                stages[k].append(v)
        out[method] = MethodTiming(method, np.array(totals), {k: np.array(v) for k, v in stages.items()})
    return RuntimeReport(out)
