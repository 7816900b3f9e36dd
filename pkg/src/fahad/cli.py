"""Command line entry point: ``fahad <subcommand>``.

Every global flag can also be set through an environment variable with the
``FAHAD_`` prefix (``FAHAD_CONFIG``, ``FAHAD_SEED``, ``FAHAD_OUT``, ``FAHAD_THREADS``,
``FAHAD_TIMING``). Flags given on the command line win over the environment.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .bench.config import ENV_PREFIX, METHODS, ExperimentConfig, env_override, load_config, semantic_problems
from .bench.figures import FIGURES, TABLES, run_figure, run_table, runtime_config
from .bench.metrics import nse
from .bench.montecarlo import build_scene, fmt, run_monte_carlo, run_trial, write_csv
from .bench.runtime import MIN_REPS, RUNTIME_COLUMNS, runtime_bench
from .crlb import closed_form_report, crlb_general
from .errors import ConfigError, FahadError
from .frontend import acquire
from .scm_recon import ExactOracle, SampledOracle, exact_covariance, reconstruct_full
from .waveform import equivalent_signal, noise_var_from_snr

ESTIMATE_COLUMNS = ("source", "theta_true_deg", "phi_true_deg", "theta_est_deg", "phi_est_deg", "error_deg")
CRLB_COLUMNS = ("source", "theta_deg", "phi_deg", "crlb_theta_deg", "crlb_phi_deg", "mode")
RECON_COLUMNS = ("n_positions", "alpha", "nse", "mode", "measurements", "seed")


def _flag_or_env(value, name, cast=str, default=None):
    if value is not None:
        return value
    raw = env_override(name)
    return default if raw is None else cast(raw)


def _truthy(text: str) -> bool:
    return text.strip().lower() in ("1", "true", "yes", "on")


def _resolve(args) -> tuple[ExperimentConfig, Path, int, bool]:
    path = _flag_or_env(args.config, "config")
    cfg = load_config(path) if path else ExperimentConfig()
    seed = _flag_or_env(args.seed, "seed", int)
    if seed is not None:
        if seed < 0 or seed >= 2 ** 64:
            raise ConfigError([f"seed must be an unsigned 64-bit integer, got {seed}"])
        cfg = replace(cfg, seed=seed)
    out = Path(_flag_or_env(args.out, "out", str, cfg.out))
    threads = _flag_or_env(args.threads, "threads", int, 1)
    timing = bool(args.timing) or _truthy(env_override("timing", "0"))
    return cfg, out, max(1, threads), timing


def _print_csv(path: Path) -> None:
    sys.stdout.write(path.read_text(encoding="utf-8"))


def cmd_simulate(args) -> int:
    cfg, out, threads, timing = _resolve(args)
    stop = cfg.trials if args.trial_stop is None else args.trial_stop
    run_monte_carlo(cfg, out, threads, timing, (args.trial_start, stop), resume=not args.no_resume)
    _print_csv(out / "results.csv")
    return 0


def cmd_estimate(args) -> int:
    cfg, out, _, _ = _resolve(args)
    cfg = replace(cfg, methods=(args.method,))
    problems = semantic_problems(cfg)
    if problems:
        raise ConfigError(problems)
    snr = cfg.snr_db[0] if args.snr is None else args.snr
    rec = run_trial(cfg, args.method, snr, args.trial)
    rows = []
    for i, t in enumerate(rec.truth_deg):
        e = rec.estimates_deg[i] if rec.estimates_deg is not None else (None, None)
        err = rec.errors_deg[i] if rec.errors_deg is not None else None
        rows.append({"source": str(i), "theta_true_deg": fmt(t[0]), "phi_true_deg": fmt(t[1]),
                     "theta_est_deg": fmt(e[0]), "phi_est_deg": fmt(e[1]), "error_deg": fmt(err)})
    out.mkdir(parents=True, exist_ok=True)
    target = out / f"estimate-{args.method}.csv"
    write_csv(target, ESTIMATE_COLUMNS, rows)
    _print_csv(target)
    if rec.failed:
        print(f"estimation failed: {rec.failure}", file=sys.stderr)
        return 1
    return 0


def cmd_crlb(args) -> int:
    cfg, out, _, _ = _resolve(args)
    snr = cfg.snr_db[0] if args.snr is None else args.snr
    scene = build_scene(cfg, args.trial)
    nv = noise_var_from_snr(snr, cfg.n_pilots)
    rad = np.rad2deg(1.0)
    rows = []
    if args.mode == "general":
        stack = acquire(scene.geometry, scene.trajectory, scene.sources, scene.pilots, nv, cfg.n_phases,
                        cfg.seed, args.trial)
        rep = crlb_general(stack.W.conj().T, scene.virtual, scene.sources,
                           equivalent_signal(scene.sources, scene.pilots), nv)
        th, ph = rep.theta_bounds() * rad, rep.phi_bounds() * rad
    else:
        th, ph = [], []
        s_bar = equivalent_signal(scene.sources, scene.pilots)
        for i, ang in enumerate(scene.sources.angles):
            p_hat = float(np.mean(np.abs(s_bar[i]) ** 2))
            rep = closed_form_report(scene.virtual, ang, cfg.n_phases, cfg.n_pilots, p_hat, nv)
            th.append(rep.theta_bounds()[0] * rad)
            ph.append(rep.phi_bounds()[0] * rad)
    for i, (ang, a, b) in enumerate(zip(scene.sources.angles, th, ph)):
        t, p = ang.degrees()
        rows.append({"source": str(i), "theta_deg": fmt(t), "phi_deg": fmt(p), "crlb_theta_deg": fmt(a),
                     "crlb_phi_deg": fmt(b), "mode": args.mode})
    out.mkdir(parents=True, exist_ok=True)
    target = out / f"crlb-{args.mode}.csv"
    write_csv(target, CRLB_COLUMNS, rows)
    _print_csv(target)
    return 0


def cmd_recon(args) -> int:
    cfg, out, _, _ = _resolve(args)
    alpha = cfg.alpha if args.alpha is None else args.alpha
    snr = cfg.snr_db[0] if args.snr is None else args.snr
    scene = build_scene(cfg, args.trial)
    nv = noise_var_from_snr(snr, cfg.n_pilots)
    r_true = exact_covariance(scene.geometry, scene.trajectory, scene.sources, scene.pilots, nv)
    if args.mode == "exact":
        oracle = ExactOracle(r_true, cfg.n_elements)
    else:
        oracle = SampledOracle.from_scene(scene.geometry, scene.trajectory, scene.sources, scene.pilots, nv,
                                          cfg.seed, args.trial, fresh_frames=args.fresh_frames or cfg.fresh_frames)
    rec = reconstruct_full(oracle, alpha)
    out.mkdir(parents=True, exist_ok=True)
    target = out / f"recon-{args.mode}.csv"
    write_csv(target, RECON_COLUMNS, [{"n_positions": str(cfg.n_positions), "alpha": fmt(alpha),
                                       "nse": fmt(nse(r_true, rec.R)), "mode": args.mode,
                                       "measurements": str(rec.measurements), "seed": str(cfg.seed)}])
    _print_csv(target)
    return 0


def cmd_bench(args) -> int:
    cfg, out, _, _ = _resolve(args)
    if not _flag_or_env(args.config, "config"):
        cfg = replace(runtime_config(), seed=cfg.seed)
    report = runtime_bench(cfg, args.reps)
    out.mkdir(parents=True, exist_ok=True)
    target = out / "runtime.csv"
    write_csv(target, RUNTIME_COLUMNS, report.rows())
    (out / "runtime.manifest.json").write_text(
        json.dumps({"config": cfg.to_dict(), "reps": args.reps, "ordered": report.ordered()}, indent=2,
                   sort_keys=True) + "\n", encoding="utf-8")
    _print_csv(target)
    print(f"ordering fa-had-music < jad-rd-music < fd-2d-music: {'yes' if report.ordered() else 'NO'}")
    return 0 if report.ordered() else 1


def cmd_fig(args) -> int:
    cfg, out, threads, timing = _resolve(args)
    seed = args.seed if args.seed is not None else _flag_or_env(None, "seed", int)
    target = run_figure(args.id, out, seed, args.trials, threads, timing)
    _print_csv(target)
    return 0


def cmd_table(args) -> int:
    _, out, _, _ = _resolve(args)
    target = run_table(args.id, out, args.reps)
    _print_csv(target)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"JSON experiment config (env {ENV_PREFIX}CONFIG)")
    common.add_argument("--seed", type=int, help=f"master seed, unsigned 64-bit (env {ENV_PREFIX}SEED)")
    common.add_argument("--out", help=f"output directory (env {ENV_PREFIX}OUT)")
    common.add_argument("--threads", type=int, help=f"worker processes (env {ENV_PREFIX}THREADS)")
    common.add_argument("--timing", action="store_true", default=None,
                        help=f"record wall-clock runtimes in results (env {ENV_PREFIX}TIMING)")

    parser = argparse.ArgumentParser(prog="fahad", description="Moving-array single-RF-chain 2-D DOA toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="Monte-Carlo sweep to results.csv")
    p.add_argument("--trial-start", type=int, default=0)
    p.add_argument("--trial-stop", type=int)
    p.add_argument("--no-resume", action="store_true", help="ignore trials already in the output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", parents=[common], help="one seeded trial of one estimator")
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--snr", type=float)
    p.add_argument("--trial", type=int, default=0)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("crlb", parents=[common], help="angle bounds for one seeded scene")
    p.add_argument("--mode", choices=("general", "closed-form"), default="general")
    p.add_argument("--snr", type=float)
    p.add_argument("--trial", type=int, default=0)
    p.set_defaults(func=cmd_crlb)

    p = sub.add_parser("recon", parents=[common], help="covariance reconstruction and its NSE")
    p.add_argument("--alpha", type=float, help="differential phase in radians")
    p.add_argument("--mode", choices=("exact", "sampled"), default="exact")
    p.add_argument("--fresh-frames", action="store_true")
    p.add_argument("--snr", type=float)
    p.add_argument("--trial", type=int, default=0)
    p.set_defaults(func=cmd_recon)

    p = sub.add_parser("bench", parents=[common], help="median runtimes of the three estimators")
    p.add_argument("--reps", type=int, default=MIN_REPS)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("fig", parents=[common], help="regenerate one figure's data")
    p.add_argument("--id", choices=sorted(FIGURES), required=True)
    p.add_argument("--trials", type=int, help="override the canned trial count")
    p.set_defaults(func=cmd_fig)

    p = sub.add_parser("table", parents=[common], help="regenerate one table")
    p.add_argument("--id", choices=TABLES, required=True)
    p.add_argument("--reps", type=int, default=MIN_REPS)
    p.set_defaults(func=cmd_table)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except (FahadError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
