"""Cramer-Rao bounds for the compressive acquisition model.

The general bound treats the combined observation y(n) = Phi A s(n) + Phi n(n), with
Phi = W^H, as a deterministic-signal model with coloured noise of covariance
sigma^2 Phi Phi^H. After whitening by Q^{-1/2}, Q = Phi Phi^H, the angle block is

    CRLB = sigma^2 / 2 * Re{ sum_n S(n)^H B~^H P B~ S(n) }^{-1},

with B~ the whitened steering derivatives ([d/dtheta for every source, then
d/dphi]), P the projector orthogonal to the whitened steering matrix and
S(n) = diag([s(n); s(n)]).

The closed-form single-source Fisher matrix replaces Q by the identity and the random
combiner Gram matrix by its mean, which leaves population moments of the virtual
element coordinates projected along and across the elevation direction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SingularInformation
from .geometry import AnglePair, VirtualArray, projected_apertures, steering_derivatives, steering_matrix
from .numerics import hermitianize, inverse_sqrt_psd
from .waveform import SourceSet

_NULL_TOL = 1e-12


@dataclass(frozen=True)
class BoundReport:
    """Angle-block CRLB, ordered theta_1..theta_L then phi_1..phi_L (rad^2)."""

    crlb: np.ndarray
    config: dict = field(default_factory=dict)

    @property
    def root_bounds(self) -> np.ndarray:
        return np.sqrt(np.diag(self.crlb))

    @property
    def n_sources(self) -> int:
        return self.crlb.shape[0] // 2

    def theta_bounds(self) -> np.ndarray:
        return self.root_bounds[:self.n_sources]

    def phi_bounds(self) -> np.ndarray:
        return self.root_bounds[self.n_sources:]

    def mean_bound_deg(self) -> float:
        """sqrt of the mean of (var_theta + var_phi) / 2 over sources, in degrees."""
        d = np.diag(self.crlb)
        return float(np.rad2deg(np.sqrt(np.mean((d[:self.n_sources] + d[self.n_sources:]) / 2.0))))


@dataclass(frozen=True)
class FisherApprox:
    """Single-source 2x2 Fisher matrix [[F_tt, F_tp], [F_tp, F_pp]]."""

    F: np.ndarray

    @property
    def theta_theta(self) -> float:
        return float(self.F[0, 0])

    @property
    def phi_phi(self) -> float:
        return float(self.F[1, 1])

    @property
    def theta_phi(self) -> float:
        return float(self.F[0, 1])


def _invert_information(info: np.ndarray) -> np.ndarray:
    """Inverse of a PSD information matrix; unidentifiable directions map to inf."""
    info = 0.5 * (info + info.T)
    w, v = np.linalg.eigh(info)
    scale = max(abs(w).max(), np.finfo(float).tiny)
    null = w <= _NULL_TOL * scale
    if not null.any():
        return np.linalg.inv(info)
    inv_w = np.where(null, 0.0, 1.0 / np.where(null, 1.0, w))
    out = (v * inv_w) @ v.T
    touched = np.abs(v[:, null]).max(axis=1) > 1e-8
    out[touched, :] = np.inf
    out[:, touched] = np.inf
    return out


def crlb_general(phi: np.ndarray, virt: VirtualArray, sources: SourceSet, s_bar: np.ndarray,
                 noise_var: float) -> BoundReport:
    """General angle-block CRLB for the combined observations.

    Args:
        phi: (K*T) x (N*K) combining matrix W^H.
        virt: virtual array.
        sources: source directions.
        s_bar: L x Np equivalent transmitted signal.
        noise_var: per-element noise variance before combining.

    Raises:
        ValueError: if K*T <= 2L.
    """
    phi = np.asarray(phi)
    n_src = sources.count
    if phi.shape[0] <= 2 * n_src:
        raise ValueError(f"K*T = {phi.shape[0]} must exceed 2L = {2 * n_src}")
    q_inv_sqrt = inverse_sqrt_psd(phi @ phi.conj().T)
    a = steering_matrix(virt, sources.thetas, sources.phis)
    derivs = [steering_derivatives(virt, ang) for ang in sources.angles]
    b = np.column_stack([d[0] for d in derivs] + [d[1] for d in derivs])
    a_w = q_inv_sqrt @ (phi @ a)
    b_w = q_inv_sqrt @ (phi @ b)
    gram = a_w.conj().T @ a_w
    proj_b = b_w - a_w @ np.linalg.solve(gram, a_w.conj().T @ b_w)
    m = b_w.conj().T @ proj_b
    s_t = np.vstack([s_bar, s_bar])
    power = s_t @ s_t.conj().T
    info = np.real(hermitianize(m) * power.T)
    crlb = 0.5 * noise_var * _invert_information(info)
    config = {
        "n_elements": virt.n_elements,
        "n_positions": virt.n_positions,
        "n_observations": phi.shape[0],
        "n_pilots": s_bar.shape[1],
        "noise_var": float(noise_var),
        "combiner": "random-phase" if phi.shape[0] < phi.shape[1] else "full",
    }
    return BoundReport(crlb, config)


def fisher_single_source(virt: VirtualArray, theta: float, phi: float, n_phases: int, n_positions: int,
                         n_pilots: int, p_hat: float, noise_var: float) -> FisherApprox:
    """Closed-form single-source Fisher matrix.

    F_tt = c cos^2(theta) T K Var(d_bar), F_pp = c sin^2(theta) T K Var(d_tilde) and
    F_tp = c sin(theta) cos(theta) T K Cov(d_bar, d_tilde), where c = 8 pi^2 Np p / sigma^2
    and the moments are population moments over the virtual coordinates.
    """
    if virt.size < 2:
        raise ValueError("need at least two virtual elements")
    d_bar, d_tilde = projected_apertures(virt, phi)
    var_b = np.mean((d_bar - d_bar.mean()) ** 2)
    var_t = np.mean((d_tilde - d_tilde.mean()) ** 2)
    cov = np.mean((d_bar - d_bar.mean()) * (d_tilde - d_tilde.mean()))
    c = 8.0 * np.pi ** 2 * n_pilots * p_hat / noise_var * n_phases * n_positions
    ct, st = np.cos(theta), np.sin(theta)
    f = c * np.array([[ct * ct * var_b, st * ct * cov], [st * ct * cov, st * st * var_t]])
    return FisherApprox(f)


def crlb_from_fisher(fisher: FisherApprox | np.ndarray) -> np.ndarray:
    """Invert a 2x2 Fisher matrix.

    Raises:
        SingularInformation: if det(F) <= 1e-18 * ||F||^2.
    """
    f = np.asarray(fisher.F if isinstance(fisher, FisherApprox) else fisher, dtype=float)
    det = f[0, 0] * f[1, 1] - f[0, 1] * f[1, 0]
    if not det > 1e-18 * max(np.abs(f).max(), np.finfo(float).tiny) ** 2:
        raise SingularInformation(f"Fisher matrix is singular (det = {det:g})")
    return np.array([[f[1, 1], -f[0, 1]], [-f[1, 0], f[0, 0]]]) / det


def closed_form_report(virt: VirtualArray, angle: AnglePair, n_phases: int, n_pilots: int, p_hat: float,
                       noise_var: float) -> BoundReport:
    """Single-source bound from the closed-form Fisher matrix, as a ``BoundReport``."""
    f = fisher_single_source(virt, angle.theta, angle.phi, n_phases, virt.n_positions, n_pilots, p_hat, noise_var)
    try:
        crlb = crlb_from_fisher(f)
    except SingularInformation:
        crlb = _invert_information(f.F)
    return BoundReport(crlb, {"n_elements": virt.n_elements, "n_positions": virt.n_positions,
                              "n_phases": n_phases, "n_pilots": n_pilots, "noise_var": float(noise_var),
                              "mode": "closed-form"})
