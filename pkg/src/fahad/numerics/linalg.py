"""Hermitian eigendecomposition and Moore-Penrose pseudo-inverse."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EigenPair:
    """Eigenvalues sorted descending, with matching eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def signal_subspace(self, rank: int) -> np.ndarray:
        return self.eigenvectors[:, :rank]

    def noise_subspace(self, rank: int) -> np.ndarray:
        if rank >= self.eigenvectors.shape[1]:
            raise ValueError(f"signal rank {rank} leaves no noise subspace in dimension "
                             f"{self.eigenvectors.shape[1]}")
        return self.eigenvectors[:, rank:]


def hermitianize(r: np.ndarray) -> np.ndarray:
    return 0.5 * (r + r.conj().T)


def hermitian_evd(r) -> EigenPair:
    """Eigendecomposition of a (nearly) Hermitian matrix.

    The input is symmetrized as (R + R^H)/2 before LAPACK ``heevd`` runs, so small
    asymmetries from finite-sample assembly do not leak into complex eigenvalues.

    Raises:
        ValueError: if ``r`` is not square or contains non-finite entries.
    """
    r = np.asarray(r)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {r.shape}")
    if not np.all(np.isfinite(r)):
        raise ValueError("matrix contains non-finite entries")
    w, v = np.linalg.eigh(hermitianize(r))
    return EigenPair(w[::-1].copy(), v[:, ::-1].copy())


def pseudo_inverse(m, rel_tol: float = 1e-10) -> np.ndarray:
    """SVD pseudo-inverse; singular values below ``rel_tol * sigma_max`` count as zero."""
    m = np.asarray(m)
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix contains non-finite entries")
    return np.linalg.pinv(m, rcond=rel_tol)


def inverse_sqrt_psd(q, floor: float = 1e-12) -> np.ndarray:
    """Q^{-1/2} of a Hermitian PSD matrix, eigenvalues floored at ``floor * lambda_max``."""
    w, v = np.linalg.eigh(hermitianize(np.asarray(q)))
    lam_max = w.max()
    if lam_max <= 0:
        raise np.linalg.LinAlgError("matrix has no positive eigenvalue")
    w = np.maximum(w, floor * lam_max)
    return (v / np.sqrt(w)) @ v.conj().T
