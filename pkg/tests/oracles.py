"""Independent reference implementations used to pin the estimators.

Everything here trades speed for obviousness: dense steering loops, golden
section search, explicit Hankel nullspaces, exhaustive permutations. The
production code must agree with these on noiseless instances; the tests
freeze that agreement.
"""

import itertools
import math

import numpy as np

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def steering_direct(f, N):
    return np.exp(-2j * np.pi * np.arange(N) * f)


def dense_null_power(E_n, Bf, f):
    """q(f) = ||E_n^H Bf a(f)||^2 evaluated from scratch."""
    v = E_n.conj().T @ (Bf @ steering_direct(f, Bf.shape[1]))
    return float(np.real(np.vdot(v, v)))


def golden_min(fun, lo, hi, iters=200):
    """Golden-section minimum of a unimodal function on [lo, hi]."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = fun(d)
    return (a + b) / 2.0


def null_spectrum_minima(E_n, Bf, K, n_grid=None):
    """K lowest minima of the dense null spectrum, golden-polished.

    The independent counterpart of polynomial rooting: a brute grid over
    [-1/2, 1/2) brackets local minima, golden section refines each, the K
    smallest survive. Only meant for noiseless, well-separated scenes.
    """
    N = Bf.shape[1]
    n_grid = 32 * N if n_grid is None else n_grid
    grid = -0.5 + np.arange(n_grid) / n_grid
    q = np.array([dense_null_power(E_n, Bf, f) for f in grid])
    is_min = (q < np.roll(q, 1)) & (q < np.roll(q, -1))
    step = 1.0 / n_grid
    refined = []
    for i in np.flatnonzero(is_min):
        f0 = grid[i]
        f = golden_min(lambda x: dense_null_power(E_n, Bf, x), f0 - step, f0 + step)
        refined.append((dense_null_power(E_n, Bf, f), f))
    refined.sort()
    out = np.array(sorted(f for _, f in refined[:K]))
    return np.mod(out + 0.5, 1.0) - 0.5


def annihilating_filter_freqs(seq, K, T):
    """Frequencies of K cisoids by the annihilating-filter (Prony) method.

    The length-(K+1) filter h annihilates the sequence; its roots are the
    signal poles exp(j*2*pi*nu*T). Exact for noiseless data with >= 2K+1
    samples; the nullspace comes from the smallest singular vector.
    """
    x = np.asarray(seq, dtype=complex).ravel()
    L = x.size
    if L < 2 * K + 1:
        raise ValueError(f"need at least {2 * K + 1} samples, got {L}")
    rows = L - K
    H = np.empty((rows, K + 1), dtype=complex)
    for r in range(rows):
        H[r] = x[r:r + K + 1][::-1]
    _, _, Vh = np.linalg.svd(H)
    h = Vh[-1].conj()
    roots = np.roots(h)
    nus = np.angle(roots) / (2.0 * np.pi * T)
    return np.sort(nus)


def exhaustive_match(est, truth, tau0, nu0):
    """Best assignment by brute force over all permutations (K <= 8)."""
    E = [(float(t[0]), float(t[1])) for t in est]
    G = [(float(t[0]), float(t[1])) for t in truth]
    K = len(G)
    assert len(E) == K and K <= 8
    best_cost, best = math.inf, None
    for perm in itertools.permutations(range(K)):
        c = sum(((E[perm[i]][0] - G[i][0]) / tau0) ** 2
                + ((E[perm[i]][1] - G[i][1]) / nu0) ** 2 for i in range(K))
        if c < best_cost:
            best_cost, best = c, perm
    sq_t = [((E[best[i]][0] - G[i][0]) / tau0) ** 2 for i in range(K)]
    sq_n = [((E[best[i]][1] - G[i][1]) / nu0) ** 2 for i in range(K)]
    rrmse_t = math.sqrt(sum(sq_t) / K) if K else 0.0
    rrmse_n = math.sqrt(sum(sq_n) / K) if K else 0.0
    return rrmse_t, rrmse_n, best


def matmul_loops(A, B):
    """Triple-loop complex matrix product, the no-tricks reference."""
    A = np.asarray(A)
    B = np.asarray(B)
    m, k = A.shape
    k2, n = B.shape
    assert k == k2
    out = np.zeros((m, n), dtype=complex)
    for i in range(m):
        for j in range(n):
            acc = 0.0 + 0.0j
            for p in range(k):
                acc += A[i, p] * B[p, j]
            out[i, j] = acc
    return out


def delayed_pulse_direct(tau, params, pulse):
    """Circular frequency-domain delay evaluated by explicit DFT sums."""
    N = params.N
    g = np.zeros(N, dtype=complex)
    g[:len(pulse)] = pulse
    k = np.arange(N)
    G = np.array([np.sum(g * np.exp(-2j * np.pi * kk * np.arange(N) / N)) for kk in k])
    shifted = G * np.exp(-2j * np.pi * k * tau / params.T)
    n = np.arange(N)
    return np.array([np.sum(shifted * np.exp(2j * np.pi * nn * k / N)) for nn in n]) / N


def poly_eval(coeffs, z):
    """Horner evaluation, highest-degree coefficient first."""
    acc = 0.0 + 0.0j
    for c in coeffs:
        acc = acc * z + c
    return acc
