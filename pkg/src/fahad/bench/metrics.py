"""Accuracy metrics: paired angle errors, RMSE and normalized covariance error."""

from __future__ import annotations

from itertools import permutations

import numpy as np
from scipy.optimize import linear_sum_assignment

EXHAUSTIVE_MAX = 6


def match(truth_deg, est_deg) -> np.ndarray:
    """Permutation ``p`` minimizing sum_l ||est[p[l]] - truth[l]||^2.

    Exhaustive over all orderings for L <= 6 (ties go to the first ordering in
    lexicographic order); the Hungarian algorithm beyond that.
    """
    truth = np.asarray(truth_deg, dtype=float).reshape(-1, 2)
    est = np.asarray(est_deg, dtype=float).reshape(-1, 2)
    if truth.shape != est.shape:
        raise ValueError(f"{truth.shape[0]} truths but {est.shape[0]} estimates")
    cost = np.sum((est[None, :, :] - truth[:, None, :]) ** 2, axis=2)
    n = truth.shape[0]
    if n > EXHAUSTIVE_MAX:
        return linear_sum_assignment(cost)[1]
    best, best_cost = None, np.inf
    rows = np.arange(n)
    for perm in permutations(range(n)):
        c = cost[rows, perm].sum()
        if c < best_cost:
            best, best_cost = perm, c
    return np.array(best)


def paired_sq_errors(truth_deg, est_deg) -> np.ndarray:
    """Per-target ((dtheta^2 + dphi^2) / 2) after optimal pairing, in deg^2, truth order."""
    truth = np.asarray(truth_deg, dtype=float).reshape(-1, 2)
    est = np.asarray(est_deg, dtype=float).reshape(-1, 2)
    p = match(truth, est)
    return np.sum((est[p] - truth) ** 2, axis=1) / 2.0


def paired_errors(truth_deg, est_deg) -> np.ndarray:
    """Per-target root errors in degrees."""
    return np.sqrt(paired_sq_errors(truth_deg, est_deg))


def rmse_from_sq_errors(sq_errors) -> float:
    """(1/L) sum_l sqrt(mean over trials of the paired squared error of target l).

    Args:
        sq_errors: (trials, L) array of per-target squared errors (deg^2) from
            successful trials only.
    """
    sq = np.asarray(sq_errors, dtype=float)
    if sq.ndim != 2 or sq.shape[0] == 0:
        raise ValueError("RMSE needs at least one successful trial")
    return float(np.mean(np.sqrt(np.mean(sq, axis=0))))


def rmse(truths, estimates) -> float:
    """RMSE in degrees over trials; ``None`` estimates mark failed trials and are skipped.

    Args:
        truths: one (L, 2) degree array for all trials, or a sequence with one per trial.
        estimates: sequence of (L, 2) degree arrays (or ``None``), one per trial.

    Raises:
        ValueError: if no trial succeeded.
    """
    estimates = list(estimates)
    t = np.asarray(truths, dtype=float)
    per_trial = [t] * len(estimates) if t.ndim == 2 else list(t)
    rows = [paired_sq_errors(tr, est) for tr, est in zip(per_trial, estimates) if est is not None]
    if not rows:
        raise ValueError("RMSE needs at least one successful trial")
    return rmse_from_sq_errors(np.array(rows))


def nse(r, r_hat) -> float:
    """||R - R_hat||_F^2 / ||R||_F^2."""
    r = np.asarray(r)
    denom = np.linalg.norm(r) ** 2
    if denom == 0:
        raise ValueError("reference covariance is zero")
    return float(np.linalg.norm(r - np.asarray(r_hat)) ** 2 / denom)
