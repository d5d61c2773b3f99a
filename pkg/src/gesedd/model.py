"""Radar scene synthesis: pulse, echo matrix, noise, and clutter.

Conventions used throughout the package:
  * fast time is sampled at the Nyquist rate 1/B, N = round(B*T) samples per
    PRI; slow time is the pulse index l = 0..L-1 (stop-and-hop: Doppler acts
    only as a pulse-to-pulse phase ramp exp(j*2*pi*nu*l*T))
  * the frequency-domain delay model is circular over the PRI: a delayed
    pulse is ifft(G * a(tau)) with G the DFT of the zero-padded pulse and
    a(tau)[k] = exp(-j*2*pi*k*tau/T)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError
from .numerics import unwrap

__all__ = [
    "RadarParams",
    "Target",
    "DelayClass",
    "Scene",
    "NoiseParams",
    "ClutterParams",
    "lfm_pulse",
    "pulse_spectrum",
    "atom",
    "coeff_sequence",
    "echo_matrix",
    "derive_noise_psd",
    "add_noise",
    "gen_clutter",
]

NOISELESS = math.inf  # sentinel snr_db value: skip noise entirely
CLUTTER_FREE = math.inf  # sentinel scr_db value: zero clutter


@dataclass(frozen=True)
class RadarParams:
    """Pulse/CPI timing and the compressive sampling geometry.

    B: bandwidth (Hz); T: pulse repetition interval (s); T_p: pulse width
    (s); L: pulses per CPI; M: compressive measurements per PRI.
    """

    B: float
    T: float
    T_p: float
    L: int
    M: int

    def __post_init__(self):
        if min(self.B, self.T, self.T_p) <= 0 or self.L < 1 or self.M < 1:
            raise ConfigError("radar parameters must be positive")
        if not self.T_p < self.T:
            raise ConfigError(f"pulse width {self.T_p} must be < PRI {self.T}")
        if self.N < 2:
            raise ConfigError("PRI too short: fewer than 2 Nyquist samples")
        if not self.M < self.N:
            raise ConfigError(f"need M < N, got M={self.M}, N={self.N}")
        if self.num_pulse_samples < 1:
            raise ConfigError("pulse shorter than one Nyquist sample")

    @property
    def T_nyq(self) -> float:
        return 1.0 / self.B

    @property
    def N(self) -> int:
        return round(self.B * self.T)

    @property
    def num_pulse_samples(self) -> int:
        return round(self.B * self.T_p)

    @property
    def tau0(self) -> float:
        """Delay resolution (s)."""
        return 1.0 / self.B

    @property
    def nu0(self) -> float:
        """Doppler resolution (Hz)."""
        return 1.0 / (self.L * self.T)

    @property
    def delay_limit(self) -> float:
        """Upper edge of the unambiguous delay interval [0, T - T_p)."""
        return self.T - self.T_p

    @property
    def doppler_limit(self) -> float:
        """Half-width of the unambiguous Doppler interval (Hz)."""
        return 0.5 / self.T


@dataclass(frozen=True)
class Target:
    tau: float  # delay (s), in [0, T - T_p)
    nu: float  # Doppler (Hz), in (-1/2T, 1/2T)
    alpha: complex  # reflectivity, nonzero

    def validate(self, params: RadarParams) -> None:
        if not 0.0 <= self.tau < params.delay_limit:
            raise ConfigError(f"delay {self.tau} outside [0, {params.delay_limit})")
        if not abs(self.nu) < params.doppler_limit:
            raise ConfigError(f"Doppler {self.nu} outside the unambiguous band")
        if self.alpha == 0:
            raise ConfigError("zero reflectivity")


@dataclass(frozen=True)
class DelayClass:
    """One distinct delay and its (Doppler, reflectivity) members."""

    tau: float
    members: tuple  # of (nu: float, alpha: complex)

    def __post_init__(self):
        if len(self.members) == 0:
            raise ConfigError("delay class needs at least one member")
        nus = [nu for nu, _ in self.members]
        if len(set(nus)) != len(nus):
            raise ConfigError(f"repeated Doppler within the class at tau={self.tau}")

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def dopplers(self) -> np.ndarray:
        return np.array([nu for nu, _ in self.members], dtype=float)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([alpha for _, alpha in self.members], dtype=complex)


@dataclass(frozen=True)
class Scene:
    classes: tuple  # of DelayClass, delays pairwise distinct

    def __post_init__(self):
        taus = [c.tau for c in self.classes]
        if len(set(taus)) != len(taus):
            raise ConfigError("delays repeat across classes; merge them into one")

    @classmethod
    def from_targets(cls, targets) -> "Scene":
        """Group a flat target list into delay classes (exact float match)."""
        by_tau: dict = {}
        for t in targets:
            by_tau.setdefault(t.tau, []).append((t.nu, t.alpha))
        classes = tuple(
            DelayClass(tau=tau, members=tuple(members))
            for tau, members in sorted(by_tau.items())
        )
        return cls(classes=classes)

    @property
    def K(self) -> int:
        return sum(c.size for c in self.classes)

    @property
    def K_tau(self) -> int:
        return len(self.classes)

    @property
    def delays(self) -> np.ndarray:
        return np.array([c.tau for c in self.classes], dtype=float)

    @property
    def targets(self) -> list:
        return [
            Target(tau=c.tau, nu=nu, alpha=alpha)
            for c in self.classes
            for nu, alpha in c.members
        ]

    def validate(self, params: RadarParams) -> None:
        for t in self.targets:
            t.validate(params)


@dataclass(frozen=True)
class NoiseParams:
    """Noise stream descriptor; N0 is derived from the requested SNR."""

    seed: object = None  # int | SeedSequence | Generator
    N0: float | None = None  # explicit PSD override (W/Hz), rarely needed

    def __post_init__(self):
        if self.N0 is not None and self.N0 < 0:
            raise ConfigError("N0 must be nonnegative")


@dataclass(frozen=True)
class ClutterParams:
    n_scatterers: int
    scr_db: float
    doppler_bin_width: float  # full width (Hz) of the clutter Doppler spread
    delay_span: tuple  # (lo, hi) seconds, within [0, T - T_p)
    seed: object = None

    def validate(self, params: RadarParams) -> None:
        if self.n_scatterers <= 0:
            raise ConfigError("n_scatterers must be positive")
        lo, hi = self.delay_span
        if not (0.0 <= lo < hi <= params.delay_limit):
            raise ConfigError(f"clutter delay span {self.delay_span} outside [0, {params.delay_limit})")
        if not 0 < self.doppler_bin_width <= 2 * params.doppler_limit:
            raise ConfigError("clutter Doppler width outside the unambiguous band")


def lfm_pulse(params: RadarParams) -> np.ndarray:
    """Baseband LFM chirp samples, unit amplitude, symmetric sweep.

    g[i] = exp(j*pi*(B/T_p)*(i/B - T_p/2)^2) for i = 0..round(B*T_p)-1.
    """
    n_p = params.num_pulse_samples
    t = np.arange(n_p) * params.T_nyq - params.T_p / 2
    return np.exp(1j * np.pi * (params.B / params.T_p) * t * t)


def pulse_spectrum(pulse: np.ndarray, N: int) -> np.ndarray:
    """Length-N DFT of the zero-padded pulse (the diagonal of G)."""
    pulse = np.asarray(pulse, dtype=complex)
    if pulse.ndim != 1 or pulse.size > N:
        raise DomainError(f"pulse must be a vector of at most N={N} samples")
    return np.fft.fft(pulse, n=N)


def _delay_phase(tau_over_T: float, N: int) -> np.ndarray:
    # a(tau)[k] = exp(-j*2*pi*k*tau/T), k = 0..N-1
    return np.exp(-2j * np.pi * np.arange(N) * tau_over_T)


def atom(tau: float, params: RadarParams, mode: str = "model_matched",
         pulse: np.ndarray | None = None) -> np.ndarray:
    """Nyquist samples of the pulse delayed by tau, as a length-N vector.

    model_matched applies the delay circularly in the frequency domain
    (the generator then matches the estimators' model exactly); physical
    evaluates the chirp's closed form at the shifted sample times, zero
    outside the pulse support.
    """
    if not 0.0 <= tau < params.delay_limit:
        raise DomainError(f"delay {tau} outside [0, {params.delay_limit})")
    N = params.N
    if mode == "model_matched":
        g = lfm_pulse(params) if pulse is None else pulse
        G = pulse_spectrum(g, N)
        return np.fft.ifft(G * _delay_phase(tau / params.T, N))
    if mode == "physical":
        if pulse is not None:
            raise DomainError("physical mode evaluates the chirp closed form; no sample vector")
        t = np.arange(N) * params.T_nyq - tau - params.T_p / 2
        out = np.exp(1j * np.pi * (params.B / params.T_p) * t * t)
        out[(t < -params.T_p / 2) | (t >= params.T_p / 2)] = 0
        return out
    raise DomainError(f"unknown atom mode {mode!r}")


def coeff_sequence(cls: DelayClass, params: RadarParams) -> np.ndarray:
    """Slow-time coefficients alpha[l] = sum_j alpha_j exp(j*2*pi*nu_j*l*T)."""
    l = np.arange(params.L)
    phases = np.exp(2j * np.pi * np.outer(cls.dopplers, l) * params.T)
    return cls.amplitudes @ phases


def echo_matrix(scene: Scene, params: RadarParams, mode: str = "model_matched") -> np.ndarray:
    """Noise-free Nyquist echo, N x L: column l is sum_i alpha_i[l] psi(tau_i)."""
    N, L = params.N, params.L
    if scene.K_tau == 0:
        return np.zeros((N, L), dtype=complex)
    pulse = lfm_pulse(params)
    psi = np.column_stack([
        atom(c.tau, params, mode, pulse=None if mode == "physical" else pulse)
        for c in scene.classes
    ])
    theta = np.vstack([coeff_sequence(c, params) for c in scene.classes])
    return psi @ theta


def derive_noise_psd(R: np.ndarray, snr_db: float, params: RadarParams) -> float:
    """One-sided PSD N0 making the per-pulse SNR equal snr_db.

    SNR is mean per-pulse echo energy over N*N0*B, the discrete form of
    (1/T) int |r(t)|^2 dt / (N0*B); the mean over the CPI is used because
    per-pulse energy varies with the slow-time coefficients.
    """
    R = np.asarray(R)
    mean_energy = float(np.mean(np.sum(np.abs(R) ** 2, axis=0)))
    if mean_energy == 0.0:
        raise DomainError("SNR undefined for an all-zero echo")
    return mean_energy / (params.N * params.B * 10.0 ** (snr_db / 10.0))


def add_noise(R: np.ndarray, snr_db: float, params: RadarParams,
              noise: NoiseParams) -> np.ndarray:
    """Add i.i.d. circular complex Gaussian noise at the requested SNR.

    snr_db = math.inf is the explicit noiseless sentinel. Per-sample
    variance is N0*B with N0 derived from the mean per-pulse echo energy
    (or taken from noise.N0 when set).
    """
    R = np.asarray(R, dtype=complex)
    if snr_db == NOISELESS:
        return R.copy()
    N0 = noise.N0 if noise.N0 is not None else derive_noise_psd(R, snr_db, params)
    sigma2 = N0 * params.B
    rng = np.random.default_rng(noise.seed)
    w = rng.standard_normal(R.shape) + 1j * rng.standard_normal(R.shape)
    return R + np.sqrt(sigma2 / 2.0) * w


def gen_clutter(params: RadarParams, cp: ClutterParams, ref_echo: np.ndarray,
                mat) -> np.ndarray:
    """Nyquist-domain clutter, N x L, scaled to cp.scr_db after compression.

    Swerling-0 scatterers: constant unit amplitude with uniform random
    phase, delays uniform on delay_span, Dopplers uniform in a band of
    width doppler_bin_width around zero. The global scale is set so the
    compressed-domain ratio sum_l ||M r^l||^2 / sum_l ||M c^l||^2 matches
    scr_db against ref_echo, which requires the measurement matrix here.
    ref_echo=None skips the scaling (raw per-scatterer unit amplitudes),
    for target-free stress scenes where an SCR is undefined.
    """
    N, L = params.N, params.L
    if cp.scr_db == CLUTTER_FREE:
        return np.zeros((N, L), dtype=complex)
    cp.validate(params)
    rng = np.random.default_rng(cp.seed)
    lo, hi = cp.delay_span
    taus = rng.uniform(lo, hi, size=cp.n_scatterers)
    nus = rng.uniform(-cp.doppler_bin_width / 2, cp.doppler_bin_width / 2,
                      size=cp.n_scatterers)
    phases = np.exp(2j * np.pi * rng.uniform(0.0, 1.0, size=cp.n_scatterers))

    G = pulse_spectrum(lfm_pulse(params), N)
    k = np.arange(N)
    l = np.arange(L)
    C = np.zeros((N, L), dtype=complex)
    # chunked so the N x n atom block stays small at large scatterer counts
    for start in range(0, cp.n_scatterers, 512):
        sl = slice(start, min(start + 512, cp.n_scatterers))
        A = np.exp(-2j * np.pi * np.outer(k, taus[sl] / params.T))
        atoms = np.fft.ifft(G[:, None] * A, axis=0)
        theta = phases[sl, None] * np.exp(2j * np.pi * np.outer(nus[sl], l) * params.T)
        C += atoms @ theta

    if ref_echo is None:
        return C
    Mdata = unwrap(mat)
    sig = float(np.sum(np.abs(Mdata @ ref_echo) ** 2))
    clu = float(np.sum(np.abs(Mdata @ C) ** 2))
    if clu == 0.0 or sig == 0.0:
        raise DomainError("SCR scaling undefined: zero compressed energy")
    C *= np.sqrt(sig / (clu * 10.0 ** (cp.scr_db / 10.0)))
    return C
