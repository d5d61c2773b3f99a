"""Doppler estimation from the slow-time coefficient rows.

Once delays are known, each delay class's slow-time sequence is a sum of
complex sinusoids exp(j*2*pi*nu*l*T): a classic line-spectrum problem,
solved per class by least-squares ESPRIT on a Hankel embedding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .aic import rank_check
from .errors import ContractViolation, DomainError, EstimationError
from .model import RadarParams, atom
from .numerics import pinv, svd, unwrap

__all__ = [
    "CoeffMatrix",
    "DopplerEstimate",
    "ModelOrderResult",
    "doppler_vector",
    "extract_coeffs",
    "hankel_singular_values",
    "esprit",
    "model_order",
]


@dataclass(frozen=True)
class CoeffMatrix:
    """Estimated slow-time coefficients, one row per estimated delay."""

    Theta_hat: np.ndarray  # K_tau x L
    row_delays: np.ndarray  # seconds, aligned to rows
    noise_gain: np.ndarray  # per-row 2-norm of the extraction pseudo-inverse


@dataclass(frozen=True)
class DopplerEstimate:
    nus_per_class: tuple  # one sorted Doppler array per delay class
    diagnostics: dict = field(default_factory=dict)

    @property
    def counts(self) -> tuple:
        return tuple(len(v) for v in self.nus_per_class)


@dataclass(frozen=True)
class ModelOrderResult:
    order: int
    criterion: np.ndarray  # value per candidate order 0..p-1
    name: str


def doppler_vector(nu: float, L: int, T: float) -> np.ndarray:
    """Slow-time response b[l] = exp(j*2*pi*nu*l*T), l = 0..L-1."""
    return np.exp(2j * np.pi * nu * np.arange(L) * T)


def extract_coeffs(S, mat, taus_hat, pulse: np.ndarray,
                   params: RadarParams) -> CoeffMatrix:
    """Theta_hat = pinv(M Psi_hat) S with atoms at the estimated delays.

    Requires M Psi_hat to have full column rank; the per-row noise gain
    records how much the pseudo-inverse amplifies white measurement noise.
    """
    data = np.asarray(unwrap(S), dtype=complex)
    taus = np.atleast_1d(np.asarray(taus_hat, dtype=float))
    Psi = np.column_stack([atom(t, params, "model_matched", pulse=pulse) for t in taus])
    report = rank_check(mat, Psi)
    if not report.full_rank:
        raise EstimationError(
            "compressed atom matrix is rank deficient at the estimated delays",
            diagnostics={"rank_report": report, "taus": taus})
    Mdata = unwrap(mat)
    P = pinv(Mdata @ Psi)
    return CoeffMatrix(Theta_hat=P @ data, row_delays=taus,
                       noise_gain=np.linalg.norm(P, axis=1))


def _hankel(alpha: np.ndarray, P: int) -> np.ndarray:
    rows = alpha.size - P + 1
    return scipy.linalg.hankel(alpha[:rows], alpha[rows - 1:])


def hankel_singular_values(alpha_hat) -> np.ndarray:
    """Singular values of the default Hankel embedding (diagnostic/order input)."""
    alpha = np.asarray(alpha_hat, dtype=complex).ravel()
    return svd(_hankel(alpha, alpha.size // 2 + 1)).s


def esprit(alpha_hat, K_i: int, T: float) -> np.ndarray:
    """K_i Doppler frequencies (Hz) from one slow-time sequence.

    Hankel columns P = floor(L/2)+1 maximize the smaller dimension; when
    L = 2*K_i exactly that leaves too few rows for the shift-invariance
    equations, so the transposed split (P = ceil(L/2)) is used instead.
    Eigenvalues of the rotation are projected radially: only their angle
    carries frequency. Output is sorted ascending in [-1/(2T), 1/(2T)).
    """
    alpha = np.asarray(alpha_hat, dtype=complex).ravel()
    L = alpha.size
    if K_i < 1:
        raise DomainError("need at least one Doppler per class")
    if L < 2 * K_i:
        raise ContractViolation(f"need L >= 2*K_i, got L={L}, K_i={K_i}")
    P = L // 2 + 1
    if L - P + 1 < K_i + 1:
        P = (L + 1) // 2
    H = _hankel(alpha, P)
    U = svd(H).U[:, :K_i]
    try:
        Phi = pinv(U[:-1]) @ U[1:]
        lam = np.linalg.eigvals(Phi)
    except np.linalg.LinAlgError as exc:
        raise EstimationError(f"rotation eigenproblem failed: {exc}") from exc
    nus = (np.mod(np.angle(lam) / (2.0 * np.pi) + 0.5, 1.0) - 0.5) / T
    return np.sort(nus)


def model_order(values, n_samples: int, criterion: str = "mdl") -> ModelOrderResult:
    """Information-criterion order selection on a descending spectrum.

    For each candidate order k the tail values[k:] are tested for equality
    through the log ratio of their geometric and arithmetic means; the
    description length (or Akaike) penalty picks the knee. Returns the
    argmin over k = 0..p-1 plus the criterion curve.
    """
    lam = np.asarray(values, dtype=float).ravel()
    if lam.size == 0:
        raise ContractViolation("empty spectrum")
    if np.any(lam < 0) or np.any(np.diff(lam) > 1e-12 * max(lam[0], 1e-300)):
        raise ContractViolation("spectrum must be nonnegative and descending")
    if criterion not in ("mdl", "aic"):
        raise ContractViolation(f"unknown criterion {criterion!r}")
    p = lam.size
    n = int(n_samples)
    floor = max(lam[0], 1e-300) * 1e-14
    safe = np.maximum(lam, floor)
    curve = np.empty(p)
    for k in range(p):
        tail = safe[k:]
        fit = -n * tail.size * (np.mean(np.log(tail)) - np.log(np.mean(tail)))
        pen = k * (2 * p - k)
        curve[k] = fit + (0.5 * pen * np.log(n) if criterion == "mdl" else pen * 2.0)
    return ModelOrderResult(order=int(np.argmin(curve)), criterion=curve,
                            name=criterion)
