"""Compressed-domain MUSIC over the virtual aperture, plus the shared 2-D search engine.

The FA-HAD pseudospectrum is 1 / (a^H W U_n U_n^H W^H a). With g = W^H a this equals
1 / (||g||^2 - ||U_s^H g||^2), so the search only needs the (K*T)-dimensional
compressed steering vectors. Each compressed entry factors as

    g[tau, k] = psi_k(theta, phi) * (w_{k,tau}^H e_0(theta, phi)),

where e_0 is the steering vector of the array at its initial position and psi_k is
the scalar phase of stop k. The literal (N*K) x (N*K) projector form is kept in
``noise_projector`` and ``projector_denominator`` as a reference.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from time import perf_counter

import numpy as np

from .frontend import MeasurementStack
from .geometry import TWO_PI, AnglePair, VirtualArray, direction_cosines, steering_matrix
from .errors import ResolutionFailure
from .numerics import GridAxis, SpectrumGrid, find_peaks, hermitian_evd

CHUNK = 8192


@dataclass(frozen=True)
class CompressedCovariance:
    R: np.ndarray
    n_pilots: int


@dataclass(frozen=True)
class AngleEstimateSet:
    """Estimated directions, unordered with respect to the truth.

    Attributes:
        pairs: tuple of ``AnglePair``.
        heights: pseudospectrum value at each pair.
        meta: grid and method details.
    """

    pairs: tuple
    heights: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.pairs)

    def degrees(self) -> np.ndarray:
        """(L, 2) array of (theta, phi) in degrees."""
        return np.array([p.degrees() for p in self.pairs]).reshape(-1, 2)


@dataclass(frozen=True)
class SearchGrid:
    """Two-stage search settings in degrees.

    A coarse grid over [-limit, limit]^2 locates ``oversample * L`` candidate peaks.
    Each is refined within +/- ``window`` of the coarse peak, first at ``mid_step`` and
    then at ``fine_step`` around the best mid-level point (``mid_step=None`` scans the
    whole window at ``fine_step``). The L highest refined peaks are kept. Refining
    before ranking matters once the aperture is large: a sharp peak that falls between
    coarse nodes is sampled on its flank and can rank below spurious ones.
    Peaks whose direction cosines lie within ``alias_tol`` of a stronger peak are
    treated as the same plane wave and skipped.
    """

    coarse_step: float = 1.0
    fine_step: float = 0.05
    window: float = 1.5
    limit: float = 89.5
    alias_tol: float = 0.02
    mid_step: float | None = 0.25
    oversample: int = 3

    def coarse_axes(self) -> tuple[GridAxis, GridAxis]:
        ax = GridAxis.degrees(-self.limit, self.limit, self.coarse_step)
        return ax, ax


def compressed_covariance(y, n_pilots: int | None = None) -> CompressedCovariance:
    """R_com = Y Y^H / Np."""
    y = np.asarray(y)
    n_pilots = y.shape[1] if n_pilots is None else int(n_pilots)
    if y.shape[1] != n_pilots:
        raise ValueError(f"Y has {y.shape[1]} columns, expected {n_pilots}")
    return CompressedCovariance(y @ y.conj().T / n_pilots, n_pilots)


class SubspaceSpectrum:
    """MUSIC denominator ||g||^2 - ||U_s^H g||^2 for a projected steering map.

    Args:
        signal_basis: orthonormal columns spanning the signal subspace.
        project: ``f(thetas, phis) -> (dim, P)`` projected steering vectors.
        normalize: divide by ||g||^2, giving the normalized MUSIC cost.
        norm_sq: known constant ||g||^2 (unit-modulus steering), skips recomputing it.
    """

    def __init__(self, signal_basis: np.ndarray, project, normalize: bool = False, norm_sq: float | None = None):
        self.us_h = np.ascontiguousarray(signal_basis.conj().T)
        self.project = project
        self.normalize = normalize
        self.norm_sq = norm_sq

    def denominator(self, thetas, phis) -> np.ndarray:
        thetas = np.asarray(thetas, dtype=float).ravel()
        phis = np.asarray(phis, dtype=float).ravel()
        out = np.empty(thetas.size)
        for s in range(0, thetas.size, CHUNK):
            g = self.project(thetas[s:s + CHUNK], phis[s:s + CHUNK])
            if self.norm_sq is None:
                total = np.einsum("ij,ij->j", g.real, g.real) + np.einsum("ij,ij->j", g.imag, g.imag)
            else:
                total = self.norm_sq
            c = self.us_h @ g
            sig = np.einsum("ij,ij->j", c.real, c.real) + np.einsum("ij,ij->j", c.imag, c.imag)
            out[s:s + CHUNK] = (total - sig) / total if self.normalize else total - sig
        return out

    def pseudospectrum(self, thetas, phis) -> np.ndarray:
        return 1.0 / np.maximum(self.denominator(thetas, phis), 1e-300)

    def grid(self, theta_axis: np.ndarray, phi_axis: np.ndarray) -> np.ndarray:
        tt, pp = np.meshgrid(theta_axis, phi_axis, indexing="ij")
        return self.pseudospectrum(tt, pp).reshape(tt.shape)


def _uv_distinct(theta_axis, phi_axis, tol):
    """Reject peaks whose direction cosines nearly coincide with an accepted peak.

    The map (theta, phi) -> (sin(theta)cos(phi), sin(theta)sin(phi)) folds near
    theta = 0 and repeats on the phi = +/-90 deg edges, so one plane wave can produce
    several local maxima that are far apart in angle but not in direction cosines.
    """

    def uv(idx):
        return np.array(direction_cosines(theta_axis[idx[0]], phi_axis[idx[1]]))

    def check(idx, picked):
        here = uv(idx)
        return all(np.max(np.abs(here - uv(p))) > tol for p in picked)

    return check


MAX_RECENTER = 8


def _refine(spectrum, t0, p0, grid, lim):
    """Local maximum near (t0, p0): mid-level scan of the window, then the fine scan.

    A maximum on the window edge means the peak lies outside it (a ridge can carry
    the coarse peak well away from the true one), so the scan is re-centred there.
    """
    levels = [(grid.window, grid.fine_step)] if grid.mid_step is None else [
        (grid.window, grid.mid_step), (grid.mid_step, grid.fine_step)]
    h = None
    for half, step in levels:
        w, f = np.deg2rad(half), np.deg2rad(step)
        n = int(round(w / f))
        offs = f * np.arange(-n, n + 1)
        for _ in range(MAX_RECENTER + 1):
            ft = np.clip(t0 + offs, -lim, lim)
            fp = np.clip(p0 + offs, -lim, lim)
            local = spectrum.grid(ft, fp)
            a, b = np.unravel_index(np.argmax(local), local.shape)
            moved = (ft[a], fp[b]) != (t0, p0)
            t0, p0, h = ft[a], fp[b], local[a, b]
            edge = a in (0, 2 * n) and abs(ft[a]) < lim or b in (0, 2 * n) and abs(fp[b]) < lim
            if not (edge and moved):
                break
    return t0, p0, h


def search_peaks(
    spectrum: SubspaceSpectrum,
    n_sources: int,
    grid: SearchGrid | None = None,
    theta_axis: np.ndarray | None = None,
    phi_axis: np.ndarray | None = None,
    refine: bool = True,
    min_separation: int = 2,
) -> AngleEstimateSet:
    """Coarse grid peaks, optionally refined on a local fine grid and re-ranked.

    Raises:
        ResolutionFailure: fewer than ``n_sources`` distinct peaks.
    """
    grid = grid or SearchGrid()
    if theta_axis is None or phi_axis is None:
        ta, pa = grid.coarse_axes()
        theta_axis = ta.points if theta_axis is None else theta_axis
        phi_axis = pa.points if phi_axis is None else phi_axis
    values = spectrum.grid(theta_axis, phi_axis)
    wanted = n_sources * max(1, grid.oversample) if refine else n_sources
    try:
        peaks = find_peaks(SpectrumGrid((theta_axis, phi_axis), values), wanted, min_separation,
                           distinct=_uv_distinct(theta_axis, phi_axis, grid.alias_tol))
    except ResolutionFailure as exc:
        if len(exc.found) < n_sources:
            raise
        peaks = exc.found
    meta = {"coarse_points": int(values.size), "refined": refine, "fine_step_deg": grid.fine_step}
    if not refine:
        pairs = tuple(AnglePair(theta_axis[i], phi_axis[j]) for i, j in peaks)
        return AngleEstimateSet(pairs, np.array([values[i, j] for i, j in peaks]), meta)
    lim = np.deg2rad(grid.limit)
    cands = [_refine(spectrum, theta_axis[i], phi_axis[j], grid, lim) for i, j in peaks]
    order = sorted(range(len(cands)), key=lambda c: (-cands[c][2], c))
    kept = []
    for c in order:
        uv = np.array(direction_cosines(cands[c][0], cands[c][1]))
        if all(np.max(np.abs(uv - np.array(direction_cosines(cands[k][0], cands[k][1])))) > grid.alias_tol
               for k in kept):
            kept.append(c)
        if len(kept) == n_sources:
            break
    if len(kept) < n_sources:
        raise ResolutionFailure(f"found {len(kept)} of {n_sources} distinct refined peaks",
                                found=[peaks[k] for k in kept])
    kept.sort()
    pairs = tuple(AnglePair(cands[k][0], cands[k][1]) for k in kept)
    return AngleEstimateSet(pairs, np.array([cands[k][2] for k in kept]), meta)


def compressed_projector(stack: MeasurementStack, virt: VirtualArray):
    """Map (thetas, phis) to compressed steering vectors W^H a, one column each."""
    t, k, n = stack.weights.shape
    if virt.n_elements != n or virt.n_positions != k:
        raise ValueError("measurement stack does not match the virtual array")
    comb = stack.weights.conj().reshape(t * k, n)
    base, offsets = virt.base, virt.offsets

    def project(thetas, phis):
        u, v = direction_cosines(thetas, phis)
        e0 = np.exp(1j * TWO_PI * (np.outer(base[:, 0], u) + np.outer(base[:, 1], v)))
        psi = np.exp(1j * TWO_PI * (np.outer(offsets[:, 0], u) + np.outer(offsets[:, 1], v)))
        return (comb @ e0) * np.tile(psi, (t, 1))

    return project


def direct_projector(coords):
    """Uncompressed steering map (W = I) over a virtual array or plain coordinates."""

    def project(thetas, phis):
        return steering_matrix(coords, thetas, phis)

    return project


def noise_projector(stack: MeasurementStack, noise_basis: np.ndarray) -> np.ndarray:
    """Literal (N*K) x (N*K) augmented projector W U_n U_n^H W^H."""
    en = stack.W @ noise_basis
    return en @ en.conj().T


def projector_denominator(projector: np.ndarray, virt: VirtualArray, thetas, phis) -> np.ndarray:
    """a^H P a evaluated column by column; reference for the compressed route."""
    a = steering_matrix(virt, thetas, phis)
    return np.real(np.einsum("ip,ij,jp->p", a.conj(), projector, a))


def fa_had_music(
    stack: MeasurementStack,
    virt: VirtualArray,
    n_sources: int,
    theta_grid: GridAxis | None = None,
    phi_grid: GridAxis | None = None,
    grid: SearchGrid | None = None,
    normalize: bool = False,
    timings: dict | None = None,
) -> AngleEstimateSet:
    """Estimate ``n_sources`` direction pairs from a random-phase measurement stack.

    If ``timings`` is a dict, the covariance, evd and search durations (seconds) are
    stored in it.

    Raises:
        ValueError: if K*T <= L, leaving no noise subspace.
        ResolutionFailure: if the coarse spectrum has fewer than L peaks.
    """
    dim = stack.Y.shape[0]
    if dim <= n_sources:
        raise ValueError(f"K*T = {dim} must exceed the number of sources {n_sources}")
    t0 = perf_counter()
    rcom = compressed_covariance(stack.Y)
    t1 = perf_counter()
    eig = hermitian_evd(rcom.R)
    t2 = perf_counter()
    spectrum = SubspaceSpectrum(eig.signal_subspace(n_sources), compressed_projector(stack, virt), normalize)
    est = search_peaks(
        spectrum,
        n_sources,
        grid,
        theta_axis=None if theta_grid is None else theta_grid.points,
        phi_axis=None if phi_grid is None else phi_grid.points,
    )
    if timings is not None:
        timings.update({"covariance": t1 - t0, "evd": t2 - t1, "search": perf_counter() - t2})
    return est


def music_2d(
    r: np.ndarray,
    coords,
    n_sources: int,
    grid: SearchGrid | None = None,
    exhaustive_step: float | None = None,
    timings: dict | None = None,
) -> AngleEstimateSet:
    """Full 2-D MUSIC on an uncompressed covariance (W = I).

    Args:
        r: covariance of the array whose element positions are ``coords``.
        coords: ``VirtualArray``, ``ArrayGeometry`` or an (M, 2) coordinate array.
        n_sources: number of peaks to return.
        grid: two-stage settings, used when ``exhaustive_step`` is None.
        exhaustive_step: if given, a single-stage search at this step (degrees).
        timings: if a dict, evd and search durations (seconds) are stored in it.
    """
    if r.shape[0] <= n_sources:
        raise ValueError("covariance dimension must exceed the number of sources")
    t0 = perf_counter()
    eig = hermitian_evd(r)
    t1 = perf_counter()
    spectrum = SubspaceSpectrum(eig.signal_subspace(n_sources), direct_projector(coords), norm_sq=float(r.shape[0]))
    grid = grid or SearchGrid()
    if exhaustive_step is None:
        est = search_peaks(spectrum, n_sources, grid)
    else:
        axis = GridAxis.degrees(-grid.limit, grid.limit, exhaustive_step).points
        est = search_peaks(spectrum, n_sources, grid, axis, axis, refine=False)
    if timings is not None:
        timings.update({"evd": t1 - t0, "search": perf_counter() - t1})
    return est
