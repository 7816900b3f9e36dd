"""Reduced-dimension MUSIC through the Jacobi-Anger expansion.

With z_i(phi) = 2 pi (x_i cos(phi) + y_i sin(phi)), each steering entry is
exp(j z_i sin(theta)) = sum_l J_l(z_i) e^{j l theta}. Truncating at |l| <= L1 factors
the manifold as a(theta, phi) ~ B(phi) e(theta), so the MUSIC cost
e^H B^H Un Un^H B e can be minimized over e in closed form under the constraint that
the l = 0 entry equals one. The minimum is 1 / (d^H E^+ d) with E = B^H Un Un^H B,
which leaves a 1-D search over elevation. Azimuth then follows from a 1-D search of
the ordinary MUSIC spectrum at each elevation estimate.

Since J_{-l} = (-1)^l J_l, B has only L1 + 1 independent columns: B = B+ T, where B+
holds the orders 0..L1 and T folds e(theta) onto them. T T^H = D = diag(1, 2, ..., 2),
so with H = D^{1/2} B+^H Un Un^H B+ D^{1/2} the matrices E and H share their nonzero
singular values and d^H E^+ d = [H^+]_00 exactly, with the same relative cutoff.
The folded (L1 + 1)-sized form is the default; ``method="pinv"`` keeps the literal
(2 L1 + 1)-sized computation.
"""

from __future__ import annotations

from dataclasses import dataclass
from time import perf_counter

import numpy as np

from .errors import ResolutionFailure
from .fast_music import AngleEstimateSet, SubspaceSpectrum, direct_projector
from .geometry import TWO_PI, AnglePair, VirtualArray
from .numerics import GridAxis, SpectrumGrid, bessel_j_orders, find_peaks, hermitian_evd, truncation_orders


@dataclass(frozen=True)
class BesselManifold:
    """B(phi): rows [J_{-L1}(z_i), ..., J_{L1}(z_i)] for each virtual element."""

    B: np.ndarray
    order: int
    phi: float

    def harmonic(self, theta: float) -> np.ndarray:
        """e(theta) = [e^{-j L1 theta}, ..., e^{j L1 theta}]."""
        return np.exp(1j * np.arange(-self.order, self.order + 1) * theta)

    def approximate(self, theta: float) -> np.ndarray:
        return self.B @ self.harmonic(theta)


@dataclass(frozen=True)
class JadGrid:
    """Search settings in degrees."""

    phi_coarse: float = 0.2
    phi_fine: float = 0.02
    phi_window: float = 0.2
    theta_step: float = 0.05
    limit: float = 89.5
    oversample: int = 3


def selector(order: int) -> np.ndarray:
    """Constraint vector picking the l = 0 slot of a length 2*L1+1 harmonic vector."""
    d = np.zeros(2 * order + 1)
    d[order] = 1.0
    return d


def bessel_arguments(virt: VirtualArray, phis) -> np.ndarray:
    """z_i(phi) for every virtual element; shape (len(phis), N*K)."""
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    xy = virt.coords
    return TWO_PI * (np.outer(np.cos(phis), xy[:, 0]) + np.outer(np.sin(phis), xy[:, 1]))


def bessel_manifold(virt: VirtualArray, phi: float, eps: float = 1e-3) -> BesselManifold:
    z = bessel_arguments(virt, phi)[0]
    order = int(truncation_orders(np.max(np.abs(z)), eps))
    pos = bessel_j_orders(order, z).T
    signs = (-1.0) ** np.arange(order, 0, -1)
    b = np.hstack([pos[:, :0:-1] * signs, pos])
    return BesselManifold(b, order, float(phi))


def _signal_basis(r_hat, n_sources):
    if r_hat.shape[0] <= n_sources:
        raise ValueError("covariance dimension must exceed the number of sources")
    return hermitian_evd(r_hat).signal_subspace(n_sources)


def elevation_values(us: np.ndarray, virt: VirtualArray, phis, eps: float = 1e-3,
                     pinv_tol: float = 1e-10, method: str = "folded", loading: float = 1e-6) -> np.ndarray:
    """S(phi) = d^H E(phi)^+ d over a set of elevations, given the signal subspace.

    Args:
        us: orthonormal signal-subspace basis (N*K x L).
        virt: virtual array matching the covariance.
        phis: elevations in radians.
        eps: truncation tolerance for the expansion order.
        pinv_tol: relative singular-value cutoff for ``method="pinv"``.
        method: ``"folded"`` (default), ``"pinv"`` or ``"loading"`` (diagonal loading of
            E by ``loading`` times its mean diagonal before a plain inverse).
        loading: relative diagonal load for ``method="loading"``.
    """
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    z = bessel_arguments(virt, phis)
    orders = truncation_orders(np.max(np.abs(z), axis=1), eps)
    table = bessel_j_orders(int(orders.max()), z)
    us_h = us.conj().T
    out = np.empty(phis.size)
    for order in np.unique(orders):
        idx = np.flatnonzero(orders == order)
        bp = np.transpose(table[:order + 1, idx, :], (1, 2, 0))
        if method == "folded":
            bp = bp * np.sqrt(np.r_[1.0, np.full(order, 2.0)])
            c = us_h @ bp
            h = np.transpose(bp, (0, 2, 1)) @ bp - np.conj(np.transpose(c, (0, 2, 1))) @ c
            h = 0.5 * (h + np.conj(np.transpose(h, (0, 2, 1))))
            out[idx] = np.real(np.linalg.pinv(h, rcond=pinv_tol, hermitian=True)[:, 0, 0])
            continue
        signs = (-1.0) ** np.arange(order, 0, -1)
        b = np.concatenate([bp[:, :, :0:-1] * signs, bp], axis=2)
        c = us_h @ b
        e = np.transpose(b, (0, 2, 1)) @ b - np.conj(np.transpose(c, (0, 2, 1))) @ c
        e = 0.5 * (e + np.conj(np.transpose(e, (0, 2, 1))))
        if method == "pinv":
            inv = np.linalg.pinv(e, rcond=pinv_tol, hermitian=True)
        elif method == "loading":
            mean_diag = np.real(np.trace(e, axis1=1, axis2=2)) / e.shape[1]
            inv = np.linalg.inv(e + loading * mean_diag[:, None, None] * np.eye(e.shape[1]))
        else:
            raise ValueError(f"unknown method {method!r}")
        out[idx] = np.real(inv[:, order, order])
    return out


def elevation_spectrum(r_hat: np.ndarray, virt: VirtualArray, phi_grid, n_sources: int, eps: float = 1e-3,
                       pinv_tol: float = 1e-10, method: str = "folded") -> SpectrumGrid:
    """Elevation pseudospectrum on ``phi_grid`` (a ``GridAxis`` or an array of radians)."""
    phis = phi_grid.points if isinstance(phi_grid, GridAxis) else np.asarray(phi_grid, dtype=float)
    us = _signal_basis(r_hat, n_sources)
    return SpectrumGrid((phis,), elevation_values(us, virt, phis, eps, pinv_tol, method))


def jad_rd_music(r_hat: np.ndarray, virt: VirtualArray, n_sources: int, eps: float = 1e-3,
                 phi_grid: GridAxis | None = None, theta_grid: GridAxis | None = None,
                 grid: JadGrid | None = None, pinv_tol: float = 1e-10, method: str = "folded",
                 timings: dict | None = None) -> AngleEstimateSet:
    """Elevation peaks from S(phi), then one azimuth per elevation from P(theta | phi).

    Args:
        r_hat: (N*K) x (N*K) virtual-array covariance.
        virt: matching virtual array.
        n_sources: number of sources L.
        eps: Jacobi-Anger truncation tolerance.
        phi_grid, theta_grid: optional coarse elevation axis and azimuth axis.
        grid: default search settings when axes are not given.
        timings: if a dict is passed, stage durations in seconds are stored in it.

    Raises:
        ResolutionFailure: if the elevation spectrum has fewer than L peaks.
    """
    grid = grid or JadGrid()
    t0 = perf_counter()
    us = _signal_basis(r_hat, n_sources)
    t1 = perf_counter()
    lim = np.deg2rad(grid.limit)
    phis = (phi_grid or GridAxis.degrees(-grid.limit, grid.limit, grid.phi_coarse)).points
    values = elevation_values(us, virt, phis, eps, pinv_tol, method)
    # noiseless peaks are narrow, so coarse heights are unreliable: refine extra
    # candidates first and rank them afterwards
    try:
        peaks = find_peaks(SpectrumGrid((phis,), values), n_sources * max(1, grid.oversample))
    except ResolutionFailure as exc:
        if len(exc.found) < n_sources:
            raise
        peaks = exc.found
    fine = np.deg2rad(grid.phi_fine)
    half = int(round(grid.phi_window / grid.phi_fine))
    offs = fine * np.arange(-half, half + 1)
    cands = []
    for i in peaks:
        local = np.clip(phis[i] + offs, -lim, lim)
        vals = elevation_values(us, virt, local, eps, pinv_tol, method)
        j = int(np.argmax(vals))
        cands.append((local[j], vals[j]))
    phi_hat, phi_val = [], []
    for p, v in sorted(cands, key=lambda c: -c[1]):
        if all(abs(p - q) > fine for q in phi_hat):
            phi_hat.append(p)
            phi_val.append(v)
        if len(phi_hat) == n_sources:
            break
    if len(phi_hat) < n_sources:
        raise ResolutionFailure(f"found {len(phi_hat)} of {n_sources} distinct elevation peaks")
    order = np.argsort(phi_hat)
    phi_hat = [phi_hat[k] for k in order]
    phi_val = [phi_val[k] for k in order]
    t2 = perf_counter()
    thetas = (theta_grid or GridAxis.degrees(-grid.limit, grid.limit, grid.theta_step)).points
    spectrum = SubspaceSpectrum(us, direct_projector(virt), norm_sq=float(virt.size))
    pairs, heights = [], []
    for p in phi_hat:
        pt = spectrum.pseudospectrum(thetas, np.full(thetas.size, p))
        j = int(np.argmax(pt))
        pairs.append(AnglePair(thetas[j], p))
        heights.append(pt[j])
    t3 = perf_counter()
    if timings is not None:
        timings.update({"evd": t1 - t0, "elevation": t2 - t1, "azimuth": t3 - t2})
    meta = {"elevation_values": np.array(phi_val), "eps": eps, "method": method}
    return AngleEstimateSet(tuple(pairs), np.array(heights), meta)
