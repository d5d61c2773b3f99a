"""Delay estimation on compressed pulses via beamspace subspace methods.

The compressed data obeys S = (M F^-1 G) A(f) Theta + noise, which is a
beamspace direction-finding model on an N-element virtual array: delays map
to spatial frequencies f = tau/T wrapped into [-1/2, 1/2). Two estimators
are provided over the shared beamformer Bf = M F^-1 G: polynomial rooting
of the noise-subspace null spectrum, and a grid search of the pseudospectrum.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .aic import RankReport
from .errors import ContractViolation, EstimationError
from .model import RadarParams, pulse_spectrum
from .numerics import herm_eig, poly_roots, unwrap

__all__ = [
    "BeamspaceModel",
    "MusicConfig",
    "DelayEstimate",
    "WhitenRecord",
    "SpectrumResult",
    "RootResult",
    "steering",
    "build_beamspace",
    "sample_covariance",
    "whitener",
    "whiten",
    "music_spectrum",
    "root_music",
    "freq_to_delay",
    "delay_to_freq",
    "cluster_freqs",
    "theorem2_check",
]


@dataclass(frozen=True)
class BeamspaceModel:
    """Beamformer Bf = M F^-1 G and the pulse spectrum it was built from."""

    Bf: np.ndarray  # M x N
    G_diag: np.ndarray  # length N
    params: RadarParams
    whitened: bool = False


@dataclass(frozen=True)
class MusicConfig:
    K_tau: int
    D: int = 5  # Nyquist-grid / search-grid ratio for the spectral method
    whiten: bool | None = None  # None = decide by matrix kind
    cluster_tol: float | None = None  # seconds; None = 0.1 * tau0
    rooting: str = "auto"  # auto | companion | grid_newton
    rooting_degree_limit: int = 256  # max polynomial degree for companion in auto
    locate_grid_factor: int = 16  # localization grid density for grid_newton

    def __post_init__(self):
        if self.K_tau < 1:
            raise ContractViolation("K_tau must be at least 1")
        if self.D < 1:
            raise ContractViolation("grid ratio D must be at least 1")
        if self.rooting not in ("auto", "companion", "grid_newton"):
            raise ContractViolation(f"unknown rooting mode {self.rooting!r}")


@dataclass(frozen=True)
class DelayEstimate:
    taus: np.ndarray  # sorted ascending (s)
    freqs: np.ndarray  # matching spatial frequencies in [-1/2, 1/2)
    subspace_gap: float
    method: str  # root_music | spectral_music
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class WhitenRecord:
    W: np.ndarray  # (M M^H)^(-1/2), Hermitian
    cond: float
    ok: bool
    note: str = ""


@dataclass(frozen=True)
class SpectrumResult:
    grid_freqs: np.ndarray
    values: np.ndarray
    peak_freqs: np.ndarray
    subspace_gap: float
    eigenvalues: np.ndarray


@dataclass(frozen=True)
class RootResult:
    freqs: np.ndarray
    roots: np.ndarray  # full constellation (companion) or polished minima (grid)
    subspace_gap: float
    eigenvalues: np.ndarray
    mode_used: str


def steering(f: float, N: int) -> np.ndarray:
    """Virtual-array response a[n] = exp(-j*2*pi*n*f), n = 0..N-1."""
    return np.exp(-2j * np.pi * np.arange(N) * f)


def build_beamspace(mat, pulse: np.ndarray, params: RadarParams) -> BeamspaceModel:
    """Assemble Bf = M F^-1 G row-wise with FFTs (no dense F^-1).

    Row m of M F^-1 is the inverse DFT of row m of the matrix, then each
    column k is scaled by the pulse spectrum G[k].
    """
    Mdata = unwrap(mat)
    N = params.N
    if Mdata.shape[1] != N:
        raise ContractViolation(f"matrix has {Mdata.shape[1]} columns, params say N={N}")
    G = pulse_spectrum(pulse, N)
    Bf = np.fft.ifft(Mdata, axis=1) * G[None, :]
    return BeamspaceModel(Bf=Bf, G_diag=G, params=params)


def sample_covariance(S) -> np.ndarray:
    """R = S S^H / L over the L pulse snapshots."""
    data = unwrap(S)
    if data.ndim != 2 or data.shape[1] < 1:
        raise ContractViolation("need an M x L data matrix with L >= 1")
    return data @ data.conj().T / data.shape[1]


def whitener(mat, cond_limit: float = 1e12) -> WhitenRecord:
    """Inverse square root of M M^H, used to restore white compressed noise."""
    Mdata = unwrap(mat)
    gram = Mdata @ Mdata.conj().T
    eig = herm_eig(gram)
    lo, hi = float(eig.eigenvalues[-1]), float(eig.eigenvalues[0])
    cond = math.inf if lo <= 0 else hi / lo
    if not np.isfinite(cond) or cond > cond_limit:
        m = Mdata.shape[0]
        return WhitenRecord(W=np.eye(m, dtype=complex), cond=cond, ok=False,
                            note="row Gram ill-conditioned; whitening skipped")
    inv_sqrt = eig.eigenvectors * (1.0 / np.sqrt(eig.eigenvalues))[None, :]
    W = inv_sqrt @ eig.eigenvectors.conj().T
    return WhitenRecord(W=W, cond=cond, ok=True)


def whiten(X: np.ndarray, mat):
    """Whiten data (W X) or a covariance (W X W^H) by the row-Gram of mat.

    A square Hermitian input is treated as a covariance; anything else as
    snapshot data. Returns (whitened, WhitenRecord); on an ill-conditioned
    Gram the input is returned unchanged with record.ok = False.
    """
    rec = mat if isinstance(mat, WhitenRecord) else whitener(mat)
    X = np.asarray(X, dtype=complex)
    if not rec.ok:
        return X.copy(), rec
    square = X.ndim == 2 and X.shape[0] == X.shape[1]
    if square and np.linalg.norm(X - X.conj().T) <= 1e-8 * max(np.linalg.norm(X), 1e-300):
        return rec.W @ X @ rec.W.conj().T, rec
    return rec.W @ X, rec


def freq_to_delay(f: float, T: float) -> float:
    """tau = T * mod(f + 1, 1): negative frequencies fold to the upper half PRI."""
    return T * float(np.mod(f + 1.0, 1.0))


def delay_to_freq(tau: float, T: float) -> float:
    """Forward map onto [-1/2, 1/2): f = tau/T below T/2, tau/T - 1 above."""
    f = np.mod(tau / T, 1.0)
    return float(f - 1.0) if f >= 0.5 else float(f)


def cluster_freqs(freqs: np.ndarray, tol_f: float) -> np.ndarray:
    """Merge spatial frequencies closer than tol_f (circularly, mean value)."""
    f = np.sort(np.asarray(freqs, dtype=float))
    if f.size <= 1 or tol_f <= 0:
        return f
    groups = [[f[0]]]
    for x in f[1:]:
        if x - groups[-1][-1] < tol_f:
            groups[-1].append(x)
        else:
            groups.append([x])
    # wrap-around: the last group may continue into the first (mod 1)
    if len(groups) > 1 and (groups[0][0] + 1.0) - groups[-1][-1] < tol_f:
        head = groups.pop(0)
        groups[-1].extend(x + 1.0 for x in head)
    merged = np.array([np.mean(g) for g in groups])
    merged = np.mod(merged + 0.5, 1.0) - 0.5
    return np.sort(merged)


def _subspaces(R_hat: np.ndarray, K: int):
    eig = herm_eig(R_hat)
    lam = eig.eigenvalues
    if K >= lam.size:
        raise ContractViolation(f"K_tau={K} must be below the covariance size {lam.size}")
    denom = lam[K]
    gap = math.inf if denom <= 0 else float(lam[K - 1] / denom)
    return eig, gap


def _power_fft(rows: np.ndarray, nfft: int, twiddle=None, out=None) -> np.ndarray:
    """Accumulate sum_r |FFT(rows_r * twiddle, nfft)|^2 without big buffers."""
    acc = out if out is not None else np.zeros(nfft)
    for i in range(0, rows.shape[0], 128):
        block = rows[i:i + 128]
        if twiddle is not None:
            block = block * twiddle[None, :]
        F = scipy.fft.fft(block, n=nfft, axis=1)
        acc += np.sum(F.real ** 2 + F.imag ** 2, axis=0)
    return acc


def _noise_power_fft(E_n: np.ndarray, Bf: np.ndarray, nfft: int, twiddle=None):
    """sum_r |FFT(V_r)|^2 over rows of V = E_n^H Bf, built chunkwise.

    V is assembled a few rows at a time so the (M-K) x N product never has
    to be materialized at large N.
    """
    acc = np.zeros(nfft)
    for i in range(0, E_n.shape[1], 128):
        V = E_n[:, i:i + 128].conj().T @ Bf
        _power_fft(V, nfft, twiddle=twiddle, out=acc)
    return acc


def _null_autocorr(E_n: np.ndarray, Bf: np.ndarray):
    """Diagonal sums c_m of C = Bf^H E_n E_n^H Bf for lags m = 0..N-1.

    c_m = sum_k C[k, k+m] equals the summed row autocorrelation of
    V = E_n^H Bf, computed with zero-padded FFTs instead of the N x N C.
    """
    N = Bf.shape[1]
    nfft = scipy.fft.next_fast_len(2 * N - 1, real=False)
    power = _noise_power_fft(E_n, Bf, nfft)
    acf = scipy.fft.ifft(power)
    c0 = float(acf[0].real)
    cpos = np.asarray(acf[1:N], dtype=complex)
    return c0, cpos


def _null_value_derivs(c0: float, cpos: np.ndarray, f: float):
    """Null spectrum q(f) = a^H C a and its first two derivatives in omega."""
    m = np.arange(1, cpos.size + 1)
    w = cpos * np.exp(-2j * np.pi * f * m)
    q = c0 + 2.0 * float(np.sum(w.real))
    dq = 2.0 * float(np.sum(m * w.imag))
    d2q = -2.0 * float(np.sum(m * m * w.real))
    return q, dq, d2q


def _wrap_half(f: np.ndarray) -> np.ndarray:
    return np.mod(np.asarray(f, dtype=float) + 0.5, 1.0) - 0.5


def _circ_dist(a: np.ndarray, b: float) -> np.ndarray:
    d = np.abs(np.mod(a - b, 1.0))
    return np.minimum(d, 1.0 - d)


def _select_separated(freqs, scores, K, min_sep):
    """Greedy pick by ascending score with a circular separation guard."""
    chosen = []
    for i in np.argsort(scores, kind="stable"):
        f = freqs[i]
        if all(_circ_dist(np.array([f]), g)[0] >= min_sep for g in chosen):
            chosen.append(float(f))
        if len(chosen) == K:
            break
    return chosen


def _valid_freq_mask(freqs: np.ndarray, params: RadarParams) -> np.ndarray:
    # candidates must map into the unambiguous delay interval [0, T - T_p);
    # frequencies in the forbidden wrap band are artifacts, never targets
    taus = np.mod(np.asarray(freqs, dtype=float) + 1.0, 1.0) * params.T
    return taus < params.delay_limit


def _roots_to_freqs(roots: np.ndarray, K: int, params: RadarParams):
    """Root-selection rule: closed unit disk, nearest the circle, inside the
    valid delay image, separated."""
    inside = roots[np.abs(roots) <= 1.0 + 1e-6]
    dist = np.abs(1.0 - np.abs(inside))
    freqs = np.angle(inside) / (2.0 * np.pi)
    ok = _valid_freq_mask(freqs, params)
    chosen = _select_separated(freqs[ok], dist[ok], K,
                               min_sep=1.0 / (4 * params.N))
    return chosen, inside


def root_music(R_hat: np.ndarray, model: BeamspaceModel, cfg: MusicConfig) -> RootResult:
    """Delay-frequency estimation by rooting the noise-subspace polynomial.

    The null spectrum a(f)^H C a(f), C = Bf^H E_n E_n^H Bf, is a degree
    2(N-1) conjugate-palindromic polynomial in z = exp(j*2*pi*f). Roots come
    in conjugate-reciprocal pairs; the K_tau in-disk roots nearest the unit
    circle (with an angular separation guard of a quarter bin) give the
    frequencies f = angle(z)/(2*pi).

    Companion-matrix rooting is exact but cubic in N, so above
    rooting_degree_limit the same polynomial is instead minimized on a dense
    frequency grid and polished by Newton iterations on its derivative; the
    two paths agree to close to machine precision and are covered by the
    same tests.
    """
    Bf = model.Bf
    M, N = Bf.shape
    K = cfg.K_tau
    if K >= M:
        raise ContractViolation(f"need K_tau < M, got K_tau={K}, M={M}")
    eig, gap = _subspaces(np.asarray(R_hat, dtype=complex), K)
    E_n = eig.eigenvectors[:, K:]
    c0, cpos = _null_autocorr(E_n, Bf)

    degree = 2 * (N - 1)
    mode = cfg.rooting
    if mode == "auto":
        mode = "companion" if degree <= cfg.rooting_degree_limit else "grid_newton"

    if mode == "companion":
        coeffs = np.concatenate([np.conj(cpos[::-1]), [c0 + 0j], cpos])
        roots = poly_roots(coeffs)
        chosen, constellation = _roots_to_freqs(roots, K, model.params)
        if len(chosen) < K:
            raise EstimationError(
                f"only {len(chosen)} separated near-circle roots, need {K}",
                diagnostics={"subspace_gap": gap, "n_candidates": len(chosen)})
        freqs = _wrap_half(np.array(chosen))
        return RootResult(freqs=freqs, roots=constellation, subspace_gap=gap,
                          eigenvalues=eig.eigenvalues, mode_used="companion")

    # grid localization + Newton polish of the same polynomial
    n_grid = N * cfg.locate_grid_factor
    power = _noise_power_fft(E_n, Bf, n_grid, twiddle=_half_twiddle(N))
    grid = -0.5 + np.arange(n_grid) / n_grid
    is_min = (power < np.roll(power, 1)) & (power < np.roll(power, -1))
    cand_idx = np.flatnonzero(is_min)
    if cand_idx.size > 0:
        keep = np.argsort(power[cand_idx], kind="stable")[:max(4 * K, K + 8)]
        cand_idx = cand_idx[keep]
    polished = []
    for idx in cand_idx:
        f = float(grid[idx])
        q, dq, d2q = _null_value_derivs(c0, cpos, f)
        for _ in range(60):
            if d2q <= 0:
                break
            step = dq / d2q / (2.0 * np.pi)  # derivatives are in omega
            if not np.isfinite(step) or abs(step) > 1.0 / n_grid:
                break
            f -= step
            q, dq, d2q = _null_value_derivs(c0, cpos, f)
            if abs(step) < 1e-16:
                break
        polished.append((f, q))
    # dedupe minima that polished into the same null before selecting
    freqs_arr = _wrap_half(np.array([p[0] for p in polished]))
    vals_arr = np.array([p[1] for p in polished])
    ok = _valid_freq_mask(freqs_arr, model.params)
    chosen = _select_separated(freqs_arr[ok], vals_arr[ok], K, min_sep=1.0 / (4 * N))
    if len(chosen) < K:
        if degree <= 4096:  # last resort: exact rooting is still affordable
            return root_music(R_hat, model, dataclasses.replace(cfg, rooting="companion"))
        raise EstimationError(
            f"only {len(chosen)} separated spectral nulls, need {K}",
            diagnostics={"subspace_gap": gap, "n_candidates": len(chosen)})
    freqs = _wrap_half(np.array(chosen))
    return RootResult(freqs=freqs, roots=np.exp(2j * np.pi * freqs),
                      subspace_gap=gap, eigenvalues=eig.eigenvalues,
                      mode_used="grid_newton")


def _half_twiddle(N: int) -> np.ndarray:
    # shifts the FFT grid start to f = -1/2: a factor (-1)^n per column
    return np.where(np.arange(N) % 2 == 0, 1.0, -1.0).astype(complex)


def music_spectrum(R_hat: np.ndarray, model: BeamspaceModel,
                   cfg: MusicConfig) -> SpectrumResult:
    """Pseudospectrum P(f) = ||Bf a(f)||^2 / ||E_n^H Bf a(f)||^2 on a grid.

    The grid has N*D points over [-1/2, 1/2); the K_tau largest strict
    local maxima (circular, ties toward larger value then smaller f) are
    returned as peak frequencies.
    """
    Bf = model.Bf
    M, N = Bf.shape
    K = cfg.K_tau
    if K >= M:
        raise ContractViolation(f"need K_tau < M, got K_tau={K}, M={M}")
    eig, gap = _subspaces(np.asarray(R_hat, dtype=complex), K)
    E_n = eig.eigenvectors[:, K:]
    n_grid = N * cfg.D
    tw = _half_twiddle(N)
    num = _power_fft(Bf, n_grid, twiddle=tw)
    den = _noise_power_fft(E_n, Bf, n_grid, twiddle=tw)
    with np.errstate(divide="ignore", invalid="ignore"):
        values = num / den
    values = np.nan_to_num(values, nan=0.0, posinf=np.inf)
    grid = -0.5 + np.arange(n_grid) / n_grid

    is_peak = (values > np.roll(values, 1)) & (values > np.roll(values, -1))
    peaks = np.flatnonzero(is_peak)
    peaks = peaks[_valid_freq_mask(grid[peaks], model.params)]
    if peaks.size < K:
        raise EstimationError(
            f"found {peaks.size} pseudospectrum peaks, need {K}",
            diagnostics={"subspace_gap": gap, "n_peaks": int(peaks.size)})
    order = np.lexsort((grid[peaks], -values[peaks]))
    peak_freqs = grid[peaks[order[:K]]]
    return SpectrumResult(grid_freqs=grid, values=values, peak_freqs=peak_freqs,
                          subspace_gap=gap, eigenvalues=eig.eigenvalues)


def theorem2_check(Theta: np.ndarray, threshold: float = 1e-8) -> RankReport:
    """Full-row-rank test of the coefficient matrix (scene incoherence).

    Rows stay independent when every delay class carries at least one
    Doppler distinct from all other targets'; coherent scenes collapse the
    row space and are rejected here before subspace estimation.
    """
    Theta = np.asarray(Theta, dtype=complex)
    K_tau, L = Theta.shape
    if K_tau > L:
        return RankReport(min_singular_value=0.0, full_rank=False,
                          threshold=threshold, max_singular_value=0.0,
                          note=f"more rows ({K_tau}) than snapshots ({L})")
    s = np.linalg.svd(Theta, compute_uv=False)
    smax = float(s[0]) if s.size else 0.0
    smin = float(s[K_tau - 1]) if s.size >= K_tau else 0.0
    return RankReport(min_singular_value=smin, full_rank=bool(smin > threshold * smax),
                      threshold=threshold, max_singular_value=smax)
