"""Estimate-to-truth matching and the normalized RMSE metric.

A trial's estimates carry no labels, so errors are computed under the
one-to-one assignment minimizing the summed squared normalized distance
(delay in tau0 cells, Doppler in nu0 cells). Sweep points pool squared
errors over targets and trials before the root, rather than averaging
per-trial RRMSEs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ContractViolation
from .model import RadarParams

__all__ = [
    "MatchResult",
    "PooledError",
    "match_and_rrmse",
    "sign_test_p",
]


@dataclass(frozen=True)
class MatchResult:
    rrmse_tau: float
    rrmse_nu: float
    assignment: tuple  # est index assigned to each truth index
    sq_tau: np.ndarray  # per-truth-target squared normalized delay errors
    sq_nu: np.ndarray


@dataclass
class PooledError:
    """Accumulates squared normalized errors across targets and trials."""

    sum_sq_tau: float = 0.0
    sum_sq_nu: float = 0.0
    count: int = 0

    def add(self, match: MatchResult, keep=None) -> None:
        sq_t, sq_n = match.sq_tau, match.sq_nu
        if keep is not None:
            sq_t, sq_n = sq_t[list(keep)], sq_n[list(keep)]
        self.sum_sq_tau += float(np.sum(sq_t))
        self.sum_sq_nu += float(np.sum(sq_n))
        self.count += sq_t.size

    @property
    def rrmse_tau(self) -> float:
        return math.sqrt(self.sum_sq_tau / self.count) if self.count else math.nan

    @property
    def rrmse_nu(self) -> float:
        return math.sqrt(self.sum_sq_nu / self.count) if self.count else math.nan


def _pairs_array(items) -> np.ndarray:
    out = np.array([(float(t[0]), float(t[1])) for t in items], dtype=float)
    return out.reshape(-1, 2)


def match_and_rrmse(est, truth, params: RadarParams) -> MatchResult:
    """Optimal-assignment RRMSEs: exhaustive for K <= 6, Hungarian beyond.

    est and truth are sequences of (tau, nu[, ...]) of equal length K;
    RRMSE_tau = (1/tau0) * sqrt(mean((tau_est - tau)^2)) over the matched
    pairs, and likewise for Doppler with nu0.
    """
    E, G = _pairs_array(est), _pairs_array(truth)
    K = G.shape[0]
    if E.shape[0] != K:
        raise ContractViolation(f"{E.shape[0]} estimates for {K} truth targets")
    if K == 0:
        return MatchResult(0.0, 0.0, (), np.zeros(0), np.zeros(0))
    dt = (E[None, :, 0] - G[:, None, 0]) / params.tau0  # truth x est
    dn = (E[None, :, 1] - G[:, None, 1]) / params.nu0
    cost = dt ** 2 + dn ** 2
    if K <= 6:
        best, best_cost = None, math.inf
        for perm in itertools.permutations(range(K)):
            c = float(cost[range(K), perm].sum())
            if c < best_cost:
                best, best_cost = perm, c
        assignment = tuple(best)
    else:
        rows, cols = linear_sum_assignment(cost)
        order = np.argsort(rows)
        assignment = tuple(int(c) for c in cols[order])
    idx = list(assignment)
    sq_tau = dt[range(K), idx] ** 2
    sq_nu = dn[range(K), idx] ** 2
    return MatchResult(rrmse_tau=float(np.sqrt(sq_tau.mean())),
                       rrmse_nu=float(np.sqrt(sq_nu.mean())),
                       assignment=assignment, sq_tau=sq_tau, sq_nu=sq_nu)


def sign_test_p(wins: int, losses: int) -> float:
    """One-sided exact sign test: P(X >= wins) for X ~ Binomial(n, 1/2).

    Ties are dropped by the caller; small p favors the 'wins' side being
    genuinely better.
    """
    n = wins + losses
    if n == 0:
        return 1.0
    total = sum(math.comb(n, i) for i in range(wins, n + 1))
    return total / 2.0 ** n
