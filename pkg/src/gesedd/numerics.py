"""Numerical kernels used by the estimators.

Thin, contract-checked wrappers around LAPACK (via numpy) plus an explicit
companion-matrix polynomial root finder. Everything here is deterministic
given the input bits; no randomized algorithms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, DomainError

__all__ = [
    "EigResult",
    "SvdResult",
    "herm_eig",
    "svd",
    "pinv",
    "companion_matrix",
    "poly_roots",
    "unwrap",
]


def unwrap(x) -> np.ndarray:
    """Array payload of a .data-carrying wrapper; ndarrays pass through.

    The isinstance check matters: ndarrays expose a .data memoryview, so
    plain hasattr duck-typing would grab the wrong thing.
    """
    if isinstance(x, np.ndarray):
        return x
    return np.asarray(getattr(x, "data", x))


@dataclass(frozen=True)
class EigResult:
    """Full Hermitian spectrum, eigenvalues sorted descending."""

    eigenvalues: np.ndarray  # real, shape (n,), descending
    eigenvectors: np.ndarray  # complex, shape (n, n), columns paired to values


@dataclass(frozen=True)
class SvdResult:
    """Singular value decomposition A = U @ diag(s) @ Vh."""

    U: np.ndarray
    s: np.ndarray  # descending, non-negative
    Vh: np.ndarray

    @property
    def V(self) -> np.ndarray:
        return self.Vh.conj().T


def herm_eig(A: np.ndarray, hermitian_tol: float = 1e-10) -> EigResult:
    """Eigendecomposition of a Hermitian matrix, spectrum in descending order.

    Raises ContractViolation if A deviates from Hermitian symmetry by more
    than ``hermitian_tol`` relative to its norm.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ContractViolation(f"expected a square matrix, got shape {A.shape}")
    scale = np.linalg.norm(A)
    if scale > 0 and np.linalg.norm(A - A.conj().T) > hermitian_tol * scale:
        raise ContractViolation("matrix is not Hermitian within tolerance")
    w, v = np.linalg.eigh(A)
    return EigResult(eigenvalues=w[::-1].copy(), eigenvectors=v[:, ::-1].copy())


def svd(A: np.ndarray, full_matrices: bool = False) -> SvdResult:
    """SVD with singular values in descending order (LAPACK convention)."""
    U, s, Vh = np.linalg.svd(np.asarray(A), full_matrices=full_matrices)
    return SvdResult(U=U, s=s, Vh=Vh)


def pinv(A: np.ndarray, rcond: float = 1e-12) -> np.ndarray:
    """Moore-Penrose pseudo-inverse."""
    return np.linalg.pinv(np.asarray(A), rcond=rcond)


def companion_matrix(coeffs: np.ndarray) -> np.ndarray:
    """Companion matrix of the polynomial with the given coefficients.

    ``coeffs`` are ordered highest degree first, leading coefficient nonzero.
    """
    c = np.asarray(coeffs, dtype=np.complex128)
    if c.ndim != 1 or c.size < 2:
        raise DomainError("need a polynomial of degree >= 1")
    if c[0] == 0:
        raise DomainError("leading coefficient must be nonzero")
    n = c.size - 1
    comp = np.zeros((n, n), dtype=np.complex128)
    comp[0, :] = -c[1:] / c[0]
    comp[1:, :-1] = np.eye(n - 1)
    return comp


def poly_roots(coeffs: np.ndarray) -> np.ndarray:
    """All complex roots of a polynomial via companion-matrix eigenvalues.

    ``coeffs`` are ordered highest degree first. Leading zeros are trimmed;
    an all-zero (or empty) coefficient vector is a domain error. Degree-0
    polynomials have no roots.
    """
    c = np.atleast_1d(np.asarray(coeffs, dtype=np.complex128))
    nz = np.flatnonzero(c != 0)
    if nz.size == 0:
        raise DomainError("all-zero polynomial has no well-defined roots")
    c = c[nz[0]:]
    if c.size == 1:
        return np.zeros(0, dtype=np.complex128)
    # eigvals balances the companion matrix internally (geev), which is what
    # keeps large-degree root finding usable in double precision
    return np.linalg.eigvals(companion_matrix(c))


def poly_from_roots(roots: np.ndarray) -> np.ndarray:
    """Monic polynomial coefficients (highest first) with the given roots."""
    c = np.array([1.0 + 0.0j])
    for r in np.asarray(roots, dtype=np.complex128):
        c = np.convolve(c, np.array([1.0, -r], dtype=np.complex128))
    return c
