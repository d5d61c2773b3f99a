"""End-to-end sequential estimation: delays, then Dopplers, then amplitudes.

Two realizations share every stage except the delay search: method
"gesedd1" roots the noise-subspace polynomial, "gesedd2" grid-searches the
pseudospectrum. A stage failure produces a partial report tagged with the
failing stage instead of an exception, so Monte-Carlo drivers can account
for failures without losing diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .delay_est import (BeamspaceModel, MusicConfig, build_beamspace,
                        cluster_freqs, freq_to_delay, music_spectrum,
                        root_music, sample_covariance, whitener)
from .doppler_est import (doppler_vector, esprit, extract_coeffs,
                          hankel_singular_values, model_order)
from .errors import ConfigError, ContractViolation, DomainError, EstimationError
from .model import RadarParams, atom
from .numerics import pinv, unwrap

__all__ = [
    "PipelineConfig",
    "EstimateReport",
    "doppler_lowpass",
    "ls_reflectivity",
    "detect_topk",
    "run",
    "to_record",
    "parse_record",
]


@dataclass(frozen=True)
class PipelineConfig:
    method: str = "gesedd1"  # gesedd1 = rooting, gesedd2 = grid search
    K_tau: int = 1
    K_per_class: object = 1  # int, per-class sequence, or "auto"
    music: MusicConfig | None = None  # None: built from K_tau with defaults
    clutter_filter: float | None = None  # Doppler stopband half-width (Hz)
    detection_K: int | None = None  # None: keep every estimated pair

    def __post_init__(self):
        if self.method not in ("gesedd1", "gesedd2"):
            raise ConfigError(f"unknown method {self.method!r}")
        if self.K_tau < 1:
            raise ConfigError("K_tau must be at least 1")
        if self.detection_K is not None and self.detection_K < 1:
            raise ConfigError("detection_K must be at least 1")
        if self.music is not None and self.music.K_tau != self.K_tau:
            raise ConfigError("music.K_tau disagrees with pipeline K_tau")

    def resolved_music(self) -> MusicConfig:
        return self.music if self.music is not None else MusicConfig(K_tau=self.K_tau)


@dataclass(frozen=True)
class EstimateReport:
    """Estimates grouped by delay class plus a flat amplitude-sorted list.

    classes: tuple of (tau, ((nu, alpha), ...)); flat: tuple of
    (tau, nu, alpha) sorted by |alpha| descending. A failed stage leaves
    the later fields empty and names itself in failed_stage.
    """

    classes: tuple = ()
    flat: tuple = ()
    diagnostics: dict = field(default_factory=dict)
    failed_stage: str | None = None
    metrics: dict | None = None


def doppler_lowpass(S_c, cutoff: float, T: float, invert: bool = False) -> np.ndarray:
    """Slow-time DFT masking: zero every Doppler bin with |freq| <= cutoff.

    This removes near-zero-Doppler clutter and passes everything else;
    invert=True keeps only the |freq| <= cutoff bins instead (a literal
    low-pass, useful as a negative control).
    """
    if not 0.0 < cutoff < 0.5 / T:
        raise ConfigError(f"cutoff {cutoff} outside (0, {0.5 / T})")
    data = np.asarray(unwrap(S_c), dtype=complex)
    L = data.shape[1]
    freqs = np.fft.fftfreq(L, d=T)
    stop = np.abs(freqs) <= cutoff
    X = np.fft.fft(data, axis=1)
    X[:, stop if not invert else ~stop] = 0.0
    return np.fft.ifft(X, axis=1)


def ls_reflectivity(s_prime, pairs, mat, pulse: np.ndarray, params: RadarParams):
    """Least-squares amplitudes over the delay-Doppler dictionary.

    Column (i, j) is kron(b(nu_ij), M psi(tau_i)) against the pulse-stacked
    measurement vector vec(S). Returns (alpha_hat, residual_norm).
    """
    data = np.asarray(unwrap(s_prime), dtype=complex)
    s_vec = data.flatten(order="F") if data.ndim == 2 else data.ravel()
    Mdata = unwrap(mat)
    M = Mdata.shape[0]
    L = s_vec.size // M
    if M * L != s_vec.size:
        raise ContractViolation("measurement vector length is not a multiple of M")
    pairs = list(pairs)
    if not pairs:
        raise ContractViolation("need at least one (tau, nu) pair")
    compressed = {}
    for tau, _ in pairs:
        if tau not in compressed:
            compressed[tau] = Mdata @ atom(tau, params, "model_matched", pulse=pulse)
    D = np.column_stack([
        np.kron(doppler_vector(nu, L, params.T), compressed[tau])
        for tau, nu in pairs
    ])
    sv = np.linalg.svd(D, compute_uv=False)
    if sv[-1] <= 1e-8 * sv[0]:
        raise EstimationError(
            f"rank-deficient dictionary; nearest pairs {_closest_pair(D, pairs)}",
            diagnostics={"singular_values": sv, "pairs": pairs})
    alpha = pinv(D) @ s_vec
    residual = float(np.linalg.norm(s_vec - D @ alpha))
    return alpha, residual


def _closest_pair(D: np.ndarray, pairs):
    cols = D / np.linalg.norm(D, axis=0, keepdims=True)
    gram = np.abs(cols.conj().T @ cols)
    np.fill_diagonal(gram, 0.0)
    i, j = np.unravel_index(int(np.argmax(gram)), gram.shape)
    return pairs[i], pairs[j]


def detect_topk(report: EstimateReport, K: int):
    """Top-K pairs by |alpha|, ties toward smaller tau then smaller nu.

    Returns (targets, truncated): truncated is True when K exceeded the
    available pairs and everything was returned.
    """
    ordered = sorted(report.flat, key=lambda t: (-abs(t[2]), t[0], t[1]))
    if K >= len(ordered):
        return list(ordered), K > len(ordered)
    return list(ordered[:K]), False


def _resolve_counts(cfg: PipelineConfig, coeff, L: int):
    """Per-class Doppler counts from config or from the Hankel spectra."""
    n_classes = coeff.Theta_hat.shape[0]
    cap = L // 2
    if cfg.K_per_class == "auto":
        counts = []
        for row in coeff.Theta_hat:
            s = hankel_singular_values(row)
            k = model_order(s, n_samples=max(2, L - s.size + 1)).order
            counts.append(min(max(k, 1), cap))
        budget = (cfg.detection_K or sum(counts)) + 2
        while sum(counts) > budget:
            counts[int(np.argmax(counts))] -= 1
        return counts
    if isinstance(cfg.K_per_class, int):
        if cfg.K_per_class > cap:
            raise ConfigError(f"K_per_class {cfg.K_per_class} needs L >= {2 * cfg.K_per_class}")
        return [cfg.K_per_class] * n_classes
    counts = [int(k) for k in cfg.K_per_class]
    if len(counts) != n_classes:
        raise ConfigError(f"{len(counts)} per-class counts for {n_classes} classes")
    if any(not 1 <= k <= cap for k in counts):
        raise ConfigError("per-class counts must satisfy 1 <= K_i <= L/2")
    return counts


def run(S, mat, pulse: np.ndarray, params: RadarParams,
        cfg: PipelineConfig) -> EstimateReport:
    """Full sequential estimate; returns a partial report on stage failure."""
    music = cfg.resolved_music()
    diag: dict = {}
    data = np.asarray(unwrap(S), dtype=complex)
    stage = "filter"
    try:
        filtered = data
        if cfg.clutter_filter is not None:
            filtered = doppler_lowpass(data, cfg.clutter_filter, params.T)

        stage = "whiten"
        model = build_beamspace(mat, pulse, params)
        kind = getattr(mat, "kind", "")
        want_whiten = music.whiten if music.whiten is not None else kind != "partial_fourier"
        cov_input = filtered
        if want_whiten:
            rec = whitener(mat)
            diag["whiten_cond"] = rec.cond
            diag["whitened"] = rec.ok
            if rec.ok:
                cov_input = rec.W @ filtered
                model = BeamspaceModel(Bf=rec.W @ model.Bf, G_diag=model.G_diag,
                                       params=params, whitened=True)
        else:
            diag["whitened"] = False

        stage = "covariance"
        R_hat = sample_covariance(cov_input)

        stage = "delay"
        if cfg.method == "gesedd1":
            rr = root_music(R_hat, model, music)
            freqs, diag["rooting_mode"] = rr.freqs, rr.mode_used
            diag["subspace_gap"] = rr.subspace_gap
            diag["eigenvalues"] = rr.eigenvalues
            diag["roots"] = rr.roots
        else:
            sp = music_spectrum(R_hat, model, music)
            freqs = sp.peak_freqs
            diag["subspace_gap"] = sp.subspace_gap
            diag["eigenvalues"] = sp.eigenvalues
            diag["spectrum_freqs"] = sp.grid_freqs
            diag["spectrum_values"] = sp.values
        tol = music.cluster_tol if music.cluster_tol is not None else 0.1 * params.tau0
        freqs = cluster_freqs(freqs, tol / params.T)
        taus = np.sort([freq_to_delay(f, params.T) for f in freqs])
        diag["taus"] = taus

        stage = "coeff"
        coeff = extract_coeffs(filtered, mat, taus, pulse, params)
        diag["noise_gain"] = coeff.noise_gain

        stage = "doppler"
        counts = _resolve_counts(cfg, coeff, params.L)
        nus_per_class = [esprit(coeff.Theta_hat[i], counts[i], params.T)
                         for i in range(len(taus))]

        stage = "amplitude"
        pairs = [(float(tau), float(nu))
                 for i, tau in enumerate(taus) for nu in nus_per_class[i]]
        alphas, residual = ls_reflectivity(filtered, pairs, mat, pulse, params)
        diag["residual"] = residual
        scale = float(np.linalg.norm(filtered))
        diag["residual_rel"] = residual / scale if scale > 0 else math.inf

        stage = "detect"
        classes = []
        idx = 0
        for i, tau in enumerate(taus):
            members = tuple((pairs[idx + j][1], complex(alphas[idx + j]))
                            for j in range(counts[i]))
            classes.append((float(tau), members))
            idx += counts[i]
        flat = tuple(sorted(((t, n, a) for t, ms in classes for n, a in ms),
                            key=lambda x: (-abs(x[2]), x[0], x[1])))
        report = EstimateReport(classes=tuple(classes), flat=flat, diagnostics=diag)
        K_det = cfg.detection_K if cfg.detection_K is not None else len(flat)
        detected, truncated = detect_topk(report, K_det)
        diag["detected"] = tuple(detected)
        diag["detect_truncated"] = truncated
        return report
    except (EstimationError, DomainError) as exc:
        diag["error"] = str(exc)
        details = getattr(exc, "diagnostics", None)
        if details:
            diag["error_details"] = details
        return EstimateReport(classes=(), flat=(), diagnostics=diag,
                              failed_stage=stage)


def _fmt_complex(z: complex) -> str:
    return f"{z.real!r},{z.imag!r}"


def to_record(report: EstimateReport) -> str:
    """Flat key=value serialization of the estimate (floats via repr)."""
    lines = [f"failed_stage={report.failed_stage or ''}",
             f"n_classes={len(report.classes)}"]
    for i, (tau, members) in enumerate(report.classes):
        lines.append(f"class.{i}.tau={tau!r}")
        lines.append(f"class.{i}.size={len(members)}")
        for j, (nu, alpha) in enumerate(members):
            lines.append(f"class.{i}.member.{j}.nu={nu!r}")
            lines.append(f"class.{i}.member.{j}.alpha={_fmt_complex(alpha)}")
    for key in ("subspace_gap", "residual", "residual_rel", "whiten_cond"):
        if key in report.diagnostics:
            lines.append(f"diag.{key}={float(report.diagnostics[key])!r}")
    return "\n".join(lines) + "\n"


def parse_record(text: str) -> EstimateReport:
    """Inverse of to_record (diagnostics limited to the serialized scalars)."""
    kv = {}
    for line in text.strip().splitlines():
        key, _, value = line.partition("=")
        kv[key] = value
    classes = []
    for i in range(int(kv["n_classes"])):
        tau = float(kv[f"class.{i}.tau"])
        members = []
        for j in range(int(kv[f"class.{i}.size"])):
            nu = float(kv[f"class.{i}.member.{j}.nu"])
            re, _, im = kv[f"class.{i}.member.{j}.alpha"].partition(",")
            members.append((nu, complex(float(re), float(im))))
        classes.append((tau, tuple(members)))
    diag = {key[5:]: float(value) for key, value in kv.items()
            if key.startswith("diag.")}
    flat = tuple(sorted(((t, n, a) for t, ms in classes for n, a in ms),
                        key=lambda x: (-abs(x[2]), x[0], x[1])))
    failed = kv.get("failed_stage", "") or None
    return EstimateReport(classes=tuple(classes), flat=flat, diagnostics=diag,
                          failed_stage=failed)
