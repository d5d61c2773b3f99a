"""Compressive measurement matrices and their empirical verifiers.

The sampler is abstracted as a complex M x N matrix applied to the Nyquist
samples of each PRI. Four families are built here; everything downstream is
matrix-agnostic and only assumes full column rank of (M @ Psi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractViolation
from .numerics import unwrap

__all__ = [
    "MATRIX_KINDS",
    "MeasurementMatrix",
    "DataMatrix",
    "ComReport",
    "RankReport",
    "NoiseStats",
    "make_matrix",
    "compress",
    "compressed_noise_stats",
    "com_test",
    "rank_check",
    "xampling_degeneracy_check",
    "dump_matrix",
    "read_matrix_dump",
]

MATRIX_KINDS = ("gaussian", "bernoulli", "partial_fourier", "random_demod")


@dataclass(frozen=True)
class MeasurementMatrix:
    kind: str
    data: np.ndarray  # complex, M x N
    seed: object
    row_scaling: str  # normalization descriptor, informational

    @property
    def M(self) -> int:
        return self.data.shape[0]

    @property
    def N(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class DataMatrix:
    """Compressive measurements, M x L (one column per pulse)."""

    data: np.ndarray
    mat_kind: str = ""


@dataclass(frozen=True)
class ComReport:
    """Empirical norm-concentration tally for one (kind, M, N, epsilon)."""

    epsilon: float
    trials: int
    empirical_tail: float  # fraction of trials with | ||Mx||^2 - 1 | >= epsilon
    bound_exponent: float  # -log(tail/2)/M, nan when the tail is empty

    def __post_init__(self):
        if not 0.0 <= self.empirical_tail <= 1.0:
            raise ContractViolation("tail probability outside [0, 1]")


@dataclass(frozen=True)
class RankReport:
    min_singular_value: float
    full_rank: bool
    threshold: float
    max_singular_value: float = 0.0
    note: str = ""
    trials: int | None = None  # filled by Monte-Carlo aggregation
    success_rate: float | None = None


@dataclass(frozen=True)
class NoiseStats:
    per_row_variance: np.ndarray
    mean_variance: float
    trials: int


def make_matrix(kind: str, M: int, N: int, seed=None,
                normalize_fourier: bool = False) -> MeasurementMatrix:
    """Draw (or construct) an M x N measurement matrix of the given kind.

    gaussian: i.i.d. complex entries with variance 1/M, so E||Mx||^2 = ||x||^2.
    bernoulli: i.i.d. real +-1/sqrt(M) entries.
    partial_fourier: the first M rows of the unnormalized N-point DFT matrix
    (this exact scaling is what collapses the beamformer to [G_M | 0]).
    random_demod: disjoint integrate-and-dump windows of N/M random chips,
    scaled 1/sqrt(N/M) so the rows are orthonormal.
    """
    if kind not in MATRIX_KINDS:
        raise ConfigError(f"unknown matrix kind {kind!r}")
    if not 0 < M < N:
        raise ConfigError(f"need 0 < M < N, got M={M}, N={N}")
    rng = np.random.default_rng(seed)
    if kind == "gaussian":
        data = (rng.standard_normal((M, N)) + 1j * rng.standard_normal((M, N)))
        data *= math.sqrt(1.0 / (2 * M))
        scaling = "entry_variance=1/M"
    elif kind == "bernoulli":
        data = (rng.integers(0, 2, size=(M, N)) * 2.0 - 1.0) / math.sqrt(M)
        data = data.astype(complex)
        scaling = "entries=+-1/sqrt(M)"
    elif kind == "partial_fourier":
        data = np.exp(-2j * np.pi * np.outer(np.arange(M), np.arange(N)) / N)
        if normalize_fourier:
            data /= math.sqrt(N)
            scaling = "dft_rows/sqrt(N)"
        else:
            scaling = "dft_rows_unnormalized"
    else:  # random_demod
        if N % M != 0:
            raise ConfigError(f"random_demod needs M | N, got M={M}, N={N}")
        w = N // M
        chips = (rng.integers(0, 2, size=(M, w)) * 2.0 - 1.0) / math.sqrt(w)
        data = np.zeros((M, N), dtype=complex)
        for m in range(M):
            data[m, m * w:(m + 1) * w] = chips[m]
        scaling = "chips=+-1/sqrt(N/M)"
    return MeasurementMatrix(kind=kind, data=np.ascontiguousarray(data, dtype=complex),
                             seed=seed, row_scaling=scaling)


def compress(mat: MeasurementMatrix, R_nyq: np.ndarray,
             noise_nyq: np.ndarray | None = None) -> DataMatrix:
    """S = M (R + noise): plain matrix multiplication, no hidden scaling."""
    R = np.asarray(R_nyq, dtype=complex)
    if R.ndim != 2 or R.shape[0] != mat.N:
        raise ContractViolation(f"echo shape {R.shape} does not match N={mat.N}")
    if noise_nyq is not None:
        noise_nyq = np.asarray(noise_nyq, dtype=complex)
        if noise_nyq.shape != R.shape:
            raise ContractViolation("noise shape differs from echo shape")
        R = R + noise_nyq
    return DataMatrix(data=mat.data @ R, mat_kind=mat.kind)


def compressed_noise_stats(mat: MeasurementMatrix, N0: float, B: float,
                           trials: int, seed=None) -> NoiseStats:
    """Monte-Carlo per-entry variance of compressed Nyquist noise.

    Nyquist noise samples are CN(0, N0*B); the compressed entry m then has
    variance N0*B*||row_m||^2 (N*N0*B/M for the variance-1/M gaussian kind).
    """
    if trials < 1000:
        raise ContractViolation("need at least 1000 trials for a stable estimate")
    rng = np.random.default_rng(seed)
    M, N = mat.data.shape
    sigma2 = N0 * B
    acc = np.zeros(M)
    done = 0
    while done < trials:
        c = min(trials - done, max(1, 4_000_000 // N))
        w = rng.standard_normal((N, c)) + 1j * rng.standard_normal((N, c))
        y = mat.data @ (math.sqrt(sigma2 / 2.0) * w)
        acc += np.sum(np.abs(y) ** 2, axis=1)
        done += c
    per_row = acc / trials
    return NoiseStats(per_row_variance=per_row, mean_variance=float(per_row.mean()),
                      trials=trials)


def com_test(mat_kind: str, M: int, N: int, epsilon: float, trials: int,
             seed=None) -> ComReport:
    """Tail of | ||Mx||^2 - 1 | over fresh matrices and unit vectors.

    Each trial draws an independent matrix of the given kind and an
    independent uniform unit vector x; the tail counts trials where the
    squared norm leaves the epsilon-band around 1.
    """
    if not 0.0 < epsilon < 1.0:
        raise ContractViolation("epsilon must lie in (0, 1)")
    if mat_kind not in MATRIX_KINDS:
        raise ConfigError(f"unknown matrix kind {mat_kind!r}")
    rng = np.random.default_rng(seed)
    violations = 0
    done = 0
    fixed = None
    if mat_kind == "partial_fourier":
        fixed = make_matrix("partial_fourier", M, N).data
    # batch trials to keep the draw buffers bounded
    chunk_cap = max(1, 4_000_000 // (M * N))
    while done < trials:
        c = min(trials - done, chunk_cap)
        x = rng.standard_normal((c, N)) + 1j * rng.standard_normal((c, N))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        if mat_kind == "gaussian":
            A = rng.standard_normal((c, M, N)) + 1j * rng.standard_normal((c, M, N))
            y = np.einsum("tmn,tn->tm", A, x) * math.sqrt(1.0 / (2 * M))
        elif mat_kind == "bernoulli":
            A = (rng.integers(0, 2, size=(c, M, N)) * 2.0 - 1.0) / math.sqrt(M)
            y = np.einsum("tmn,tn->tm", A, x.astype(complex))
        elif mat_kind == "random_demod":
            w = N // M
            if w * M != N:
                raise ConfigError(f"random_demod needs M | N, got M={M}, N={N}")
            chips = rng.integers(0, 2, size=(c, N)) * 2.0 - 1.0
            y = (chips * x).reshape(c, M, w).sum(axis=2) / math.sqrt(w)
        else:
            y = x @ fixed.T
        norms = np.sum(np.abs(y) ** 2, axis=1)
        violations += int(np.count_nonzero(np.abs(norms - 1.0) >= epsilon))
        done += c
    tail = violations / trials
    exponent = -math.log(tail / 2.0) / M if tail > 0 else math.nan
    return ComReport(epsilon=epsilon, trials=trials, empirical_tail=tail,
                     bound_exponent=exponent)


def rank_check(mat, Psi: np.ndarray, threshold: float = 1e-8) -> RankReport:
    """Full-column-rank test of (M @ Psi) with a relative singular threshold."""
    Mdata = unwrap(mat)
    Psi = np.asarray(Psi, dtype=complex)
    K = Psi.shape[1]
    if K > Mdata.shape[0]:
        return RankReport(min_singular_value=0.0, full_rank=False,
                          threshold=threshold, max_singular_value=0.0,
                          note=f"K={K} columns exceed M={Mdata.shape[0]} rows")
    s = np.linalg.svd(Mdata @ Psi, compute_uv=False)
    smax = float(s[0]) if s.size else 0.0
    smin = float(s[-1]) if s.size else 0.0
    return RankReport(min_singular_value=smin, full_rank=bool(smin > threshold * smax),
                      threshold=threshold, max_singular_value=smax)


def xampling_degeneracy_check(mat: MeasurementMatrix, G: np.ndarray,
                              A: np.ndarray):
    """Verify the consecutive-DFT-rows collapse: M F^-1 = [I_M | 0].

    Also checks that M @ (F^-1 G A) equals diag(G[:M]) @ A[:M] elementwise.
    Returns (ok, max_abs_residual).
    """
    if mat.kind != "partial_fourier":
        raise ContractViolation("degeneracy identity only holds for partial_fourier")
    M, N = mat.data.shape
    G = np.asarray(G, dtype=complex)
    A = np.asarray(A, dtype=complex)
    if G.shape != (N,) or A.shape[0] != N:
        raise ContractViolation("G must be length N and A must have N rows")
    MFinv = np.fft.ifft(mat.data, axis=1)
    r1 = float(np.max(np.abs(MFinv - np.eye(M, N))))
    Psi = np.fft.ifft(G[:, None] * A, axis=0)
    r2 = float(np.max(np.abs(mat.data @ Psi - G[:M, None] * A[:M, :])))
    residual = max(r1, r2)
    return residual < 1e-10, residual


def dump_matrix(mat: MeasurementMatrix, path) -> None:
    """Row-major little-endian (re, im) float64 pairs, for cross-language use."""
    np.ascontiguousarray(mat.data).astype("<c16").tofile(path)


def read_matrix_dump(path, M: int, N: int) -> np.ndarray:
    data = np.fromfile(path, dtype="<c16")
    if data.size != M * N:
        raise ContractViolation(f"dump holds {data.size} entries, expected {M * N}")
    return data.reshape(M, N).astype(complex)
