"""Seeded Monte-Carlo sweeps over SNR with per-trial records, CSV output and resume.

Every trial draws its trajectory, sources, noise and combiners from streams keyed by
(master seed, trial id), so a trial's numbers do not depend on which worker runs it,
on the trial range requested or on the SNR point (the noise draws are shared across
SNR points and only rescaled).
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from time import perf_counter

import numpy as np

from ..baselines import fd_2d_music, fdfa_music, sfa_blocks, sfa_mode, upa_for_footprint, upa_snapshots
from ..crlb import crlb_general
from ..errors import ResolutionFailure
from ..fast_music import SearchGrid, fa_had_music
from ..frontend import acquire
from ..geometry import ArrayGeometry, Trajectory, VirtualArray, build_virtual_array, random_trajectory
from ..jad_music import JadGrid, jad_rd_music
from ..scm_recon import SampledOracle, reconstruct_full
from ..streams import Stream, generator
from ..waveform import (PilotMatrix, SourceSet, complex_noise, equivalent_signal, make_pilots, noise_var_from_snr,
                        random_sources, snapshots_at_position)
from .config import ExperimentConfig
from .metrics import match, rmse_from_sq_errors

RESULT_COLUMNS = ("snr_db", "method", "rmse_deg", "crlb_deg", "fail_rate", "median_runtime_s", "seed")
TRIAL_COLUMNS = ("snr_db", "method", "trial", "seed", "status", "truth_deg", "estimates_deg", "sq_errors_deg2",
                 "bound_sq_deg2", "runtime_s")
RAD2_TO_DEG2 = float(np.rad2deg(1.0) ** 2)


def fmt(value) -> str:
    """Fixed numeric formatting for result files; ``None`` becomes an empty field."""
    if value is None:
        return ""
    return format(float(value), ".10g")


def _join(values) -> str:
    if values is None:
        return ""
    return ";".join(format(float(v), ".17g") for v in np.ravel(values))


def _split(text: str, width: int | None = None):
    if text == "":
        return None
    arr = np.array([float(v) for v in text.split(";")])
    return arr.reshape(-1, width) if width else arr


@dataclass(frozen=True)
class Scene:
    """Everything a trial needs, drawn from the trial's own streams."""

    trial: int
    geometry: ArrayGeometry
    trajectory: Trajectory
    virtual: VirtualArray
    sources: SourceSet
    pilots: PilotMatrix

    @property
    def truth_deg(self) -> np.ndarray:
        return np.array([a.degrees() for a in self.sources.angles])


@dataclass(frozen=True)
class TrialRecord:
    """Outcome of one method on one trial.

    Attributes:
        trial, snr_db, method, seed: identity and seed lineage (streams are keyed by
            ``(seed, trial)``).
        truth_deg: (L, 2) true (theta, phi).
        estimates_deg: (L, 2) estimates reordered to match ``truth_deg``, or None on failure.
        sq_errors: per-target ((dtheta^2 + dphi^2) / 2) in deg^2, or None on failure.
        bound_sq: per-target (var_theta + var_phi) / 2 from the general CRLB, deg^2.
        timings: stage durations in seconds.
        failure: empty on success, else the reason.
    """

    trial: int
    snr_db: float
    method: str
    seed: int
    truth_deg: np.ndarray
    estimates_deg: np.ndarray | None
    sq_errors: np.ndarray | None
    bound_sq: np.ndarray
    timings: dict = field(default_factory=dict)
    failure: str = ""

    @property
    def failed(self) -> bool:
        return bool(self.failure)

    @property
    def errors_deg(self) -> np.ndarray | None:
        return None if self.sq_errors is None else np.sqrt(self.sq_errors)

    @property
    def runtime(self) -> float:
        return float(sum(v for k, v in self.timings.items() if k != "acquire"))


def build_scene(cfg: ExperimentConfig, trial: int) -> Scene:
    geom = ArrayGeometry.ula(cfg.n_elements, cfg.element_spacing, axis="y")
    tc = cfg.trajectory
    if tc.displacements is not None:
        traj = Trajectory(np.array(tc.displacements, dtype=float))
    else:
        traj = random_trajectory(generator(cfg.seed, trial, Stream.TRAJECTORY), cfg.n_positions,
                                 tc.step_min, tc.step_max, tc.axis)
    rng = generator(cfg.seed, trial, Stream.SOURCES)
    sc = cfg.sources
    if sc.angles_deg is not None:
        gains = complex_noise(rng, (cfg.n_sources,), 1.0)
        sources = SourceSet.from_degrees(sc.angles_deg, gains)
    else:
        sources = random_sources(rng, cfg.n_sources, np.deg2rad(sc.theta_range_deg), np.deg2rad(sc.phi_range_deg))
    if sc.gain == "unit":
        sources = SourceSet(sources.angles, sources.gains / np.abs(sources.gains))
    return Scene(trial, geom, traj, build_virtual_array(geom, traj), sources, make_pilots(cfg.n_sources, cfg.n_pilots))


def search_grid(cfg: ExperimentConfig) -> SearchGrid:
    g = cfg.grid
    return SearchGrid(g.coarse_step, g.fine_step, g.window, g.limit)


def jad_grid(cfg: ExperimentConfig) -> JadGrid:
    g = cfg.grid
    return JadGrid(g.phi_coarse, g.phi_fine, g.phi_window, g.theta_step, g.limit)


def _bound_sq(phi, virt, scene, noise_var) -> np.ndarray:
    """Per-source (var_theta + var_phi) / 2 in deg^2; NaN when K*T <= 2L."""
    n = scene.sources.count
    try:
        report = crlb_general(phi, virt, scene.sources, equivalent_signal(scene.sources, scene.pilots), noise_var)
    except ValueError:
        return np.full(n, np.nan)
    d = np.diag(report.crlb)
    return (d[:n] + d[n:]) / 2.0 * RAD2_TO_DEG2


def _estimate(method: str, cfg: ExperimentConfig, scene: Scene, noise_var: float, timings: dict):
    """Run one method; returns (estimate set, per-source bound in deg^2)."""
    geom, traj, virt, src, pil = scene.geometry, scene.trajectory, scene.virtual, scene.sources, scene.pilots
    seed, trial, n_src = cfg.seed, scene.trial, cfg.n_sources
    t0 = perf_counter()
    if method == "fa-had-music":
        stack = acquire(geom, traj, src, pil, noise_var, cfg.n_phases, seed, trial)
        timings["acquire"] = perf_counter() - t0
        est = fa_had_music(stack, virt, n_src, grid=search_grid(cfg), timings=timings)
        return est, _bound_sq(stack.W.conj().T, virt, scene, noise_var)
    if method == "jad-rd-music":
        oracle = SampledOracle.from_scene(geom, traj, src, pil, noise_var, seed, trial, cfg.fresh_frames)
        t1 = perf_counter()
        timings["acquire"] = t1 - t0
        r_hat = reconstruct_full(oracle, cfg.alpha).R
        timings["covariance"] = perf_counter() - t1
        est = jad_rd_music(r_hat, virt, n_src, cfg.eps, grid=jad_grid(cfg), pinv_tol=cfg.pinv_tol, timings=timings)
        return est, _bound_sq(np.eye(virt.size), virt, scene, noise_var)
    if method == "fdfa":
        blocks = [snapshots_at_position(k, geom, traj, src, pil, noise_var, generator(seed, trial, Stream.NOISE, k, 0))
                  for k in range(traj.k)]
        timings["acquire"] = perf_counter() - t0
        est = fdfa_music(blocks, virt, n_src, cfg.eps, jad_grid(cfg), timings=timings)
        return est, _bound_sq(np.eye(virt.size), virt, scene, noise_var)
    if method == "sfa":
        mode = sfa_mode(geom, traj)
        blocks = sfa_blocks(mode, src, pil, noise_var, seed, trial)
        timings["acquire"] = perf_counter() - t0
        sv = mode.virtual
        est = fdfa_music(blocks, sv, n_src, cfg.eps, jad_grid(cfg), timings=timings)
        return est, _bound_sq(np.eye(sv.size), sv, scene, noise_var)
    if method == "fd-2d-music":
        upa = upa_for_footprint(geom, traj)
        snaps = upa_snapshots(upa, src, pil, noise_var, seed, trial)
        timings["acquire"] = perf_counter() - t0
        est = fd_2d_music(snaps, upa, n_src, search_grid(cfg), cfg.grid.fd_step, timings=timings)
        uv = build_virtual_array(upa, Trajectory.stationary())
        return est, _bound_sq(np.eye(upa.n), uv, scene, noise_var)
    raise ValueError(f"unknown method {method!r}")


def run_trial(cfg: ExperimentConfig, method: str, snr_db: float, trial: int, scene: Scene | None = None) -> TrialRecord:
    """One seeded trial of one method at one SNR point."""
    scene = scene or build_scene(cfg, trial)
    truth = scene.truth_deg
    noise_var = noise_var_from_snr(snr_db, cfg.n_pilots)
    timings: dict = {}
    try:
        est, bound = _estimate(method, cfg, scene, noise_var, timings)
    except ResolutionFailure as exc:
        bound = np.full(cfg.n_sources, np.nan)
        return TrialRecord(trial, float(snr_db), method, cfg.seed, truth, None, None, bound, timings,
                           f"resolution: {exc}")
    deg = est.degrees()
    if deg.shape[0] != truth.shape[0]:
        return TrialRecord(trial, float(snr_db), method, cfg.seed, truth, None, None, bound, timings,
                           f"count: {deg.shape[0]} estimates")
    paired = deg[match(truth, deg)]
    sq = np.sum((paired - truth) ** 2, axis=1) / 2.0
    return TrialRecord(trial, float(snr_db), method, cfg.seed, truth, paired, sq, bound, timings)


def _trial_task(args):
    cfg, snr_db, trial, methods = args
    scene = build_scene(cfg, trial)
    return [run_trial(cfg, m, snr_db, trial, scene) for m in methods]


def aggregate(records, cfg: ExperimentConfig, timing: bool = False) -> list[dict]:
    """One row per (SNR, method) in config order; failed trials only enter ``fail_rate``."""
    rows = []
    for snr in cfg.snr_db:
        for method in cfg.methods:
            recs = [r for r in records if r.snr_db == float(snr) and r.method == method]
            if not recs:
                continue
            ok = [r for r in recs if not r.failed]
            rmse_val = rmse_from_sq_errors(np.array([r.sq_errors for r in ok])) if ok else None
            bounds = np.array([r.bound_sq for r in recs])
            crlb_val = None if np.isnan(bounds).all() else float(np.mean(np.sqrt(np.nanmean(bounds, axis=0))))
            runtime = float(np.median([r.runtime for r in recs])) if timing else None
            rows.append({"snr_db": fmt(snr), "method": method, "rmse_deg": fmt(rmse_val), "crlb_deg": fmt(crlb_val),
                         "fail_rate": fmt(1.0 - len(ok) / len(recs)), "median_runtime_s": fmt(runtime),
                         "seed": str(cfg.seed)})
    return rows


def config_digest(cfg: ExperimentConfig) -> str:
    d = cfg.to_dict()
    d.pop("out", None)
    return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


def record_row(r: TrialRecord, timing: bool) -> dict:
    return {"snr_db": fmt(r.snr_db), "method": r.method, "trial": str(r.trial), "seed": str(r.seed),
            "status": r.failure or "ok", "truth_deg": _join(r.truth_deg), "estimates_deg": _join(r.estimates_deg),
            "sq_errors_deg2": _join(r.sq_errors), "bound_sq_deg2": _join(r.bound_sq),
            "runtime_s": fmt(r.runtime) if timing else ""}


def record_from_row(row: dict) -> TrialRecord:
    ok = row["status"] == "ok"
    timings = {"total": float(row["runtime_s"])} if row["runtime_s"] else {}
    return TrialRecord(int(row["trial"]), float(row["snr_db"]), row["method"], int(row["seed"]),
                       _split(row["truth_deg"], 2), _split(row["estimates_deg"], 2), _split(row["sq_errors_deg2"]),
                       _split(row["bound_sq_deg2"]), timings, "" if ok else row["status"])


def write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def read_trials(path) -> list[TrialRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [record_from_row(row) for row in csv.DictReader(fh)]


@dataclass(frozen=True)
class RunSummary:
    rows: list
    records: list
    manifest: dict
    out_dir: Path | None


def _sort_key(cfg):
    snr_pos = {float(s): i for i, s in enumerate(cfg.snr_db)}
    meth_pos = {m: i for i, m in enumerate(cfg.methods)}
    return lambda r: (snr_pos.get(r.snr_db, len(snr_pos)), r.trial, meth_pos.get(r.method, len(meth_pos)))


def run_monte_carlo(cfg: ExperimentConfig, out_dir=None, threads: int = 1, timing: bool = False,
                    trial_range: tuple[int, int] | None = None, resume: bool = True,
                    notes=()) -> RunSummary:
    """Run (or resume) a sweep and write results.csv, trials.csv and manifest.json.

    Args:
        cfg: validated configuration.
        out_dir: output directory; nothing is written when None.
        threads: worker processes; results do not depend on it.
        timing: fill ``median_runtime_s`` (wall-clock, so not reproducible byte for byte).
        trial_range: half-open [start, stop) subset of trial ids to compute in this call.
        resume: reuse trials already present in ``out_dir/trials.csv`` for the same config.
        notes: extra strings recorded in the manifest.
    """
    start, stop = trial_range or (0, cfg.trials)
    if not 0 <= start <= stop <= cfg.trials:
        raise ValueError(f"trial range [{start}, {stop}) outside [0, {cfg.trials})")
    out = Path(out_dir) if out_dir is not None else None
    digest = config_digest(cfg)
    existing: list[TrialRecord] = []
    if out is not None and resume and (out / "trials.csv").exists() and (out / "manifest.json").exists():
        prior = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
        if prior.get("config_sha256") == digest:
            existing = read_trials(out / "trials.csv")
    done = {(r.snr_db, r.trial, r.method) for r in existing}
    tasks = []
    for snr in cfg.snr_db:
        for trial in range(start, stop):
            todo = tuple(m for m in cfg.methods if (float(snr), trial, m) not in done)
            if todo:
                tasks.append((cfg, float(snr), trial, todo))
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            fresh = [r for batch in pool.map(_trial_task, tasks, chunksize=max(1, len(tasks) // (4 * threads)))
                     for r in batch]
    else:
        fresh = [r for task in tasks for r in _trial_task(task)]
    records = sorted(existing + fresh, key=_sort_key(cfg))
    rows = aggregate(records, cfg, timing)
    completed = sorted({r.trial for r in records})
    manifest = {
        "package": "fahad",
        "config": cfg.to_dict(),
        "config_sha256": digest,
        "seed": cfg.seed,
        "streams": {s.name.lower(): int(s) for s in Stream},
        "trials_requested": cfg.trials,
        "trials_completed": len(completed),
        "complete": len(completed) == cfg.trials,
        "timing": bool(timing),
        "files": ["results.csv", "trials.csv"],
        "columns": list(RESULT_COLUMNS),
        "notes": list(notes),
    }
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "trials.csv", TRIAL_COLUMNS, [record_row(r, timing) for r in records])
        write_csv(out / "results.csv", RESULT_COLUMNS, rows)
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return RunSummary(rows, records, manifest, out)


def default_threads() -> int:
    return max(1, int(os.environ.get("FAHAD_THREADS", "1")))
