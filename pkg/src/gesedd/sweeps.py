"""Monte-Carlo experiment drivers behind the CLI subcommands.

Every trial's randomness descends from (master_seed, tagged spawn key), so
a sweep is bit-reproducible from its config alone; paired comparisons (for
example clutter filter on versus off) reuse the same keys and therefore
the same scenes, noise, and clutter.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import model as mdl
from .aic import com_test, make_matrix, rank_check
from .config import RunConfig
from .delay_est import theorem2_check
from .errors import ConfigError
from .metrics import MatchResult, PooledError, match_and_rrmse
from .model import (ClutterParams, DelayClass, RadarParams, Scene, Target,
                    coeff_sequence, derive_noise_psd, echo_matrix, gen_clutter,
                    lfm_pulse)
from .pipeline import PipelineConfig, run

__all__ = [
    "MetricRow",
    "TrialDetail",
    "sample_separated_scene",
    "sweep_snr",
    "sweep_resolution",
    "sweep_clutter",
    "sweep_theorem1",
    "theorem2_battery",
    "com_battery",
    "run_once",
]

# spawn-key namespaces so no two RNG streams can collide
_TAG_TRIAL = 0
_TAG_MATRIX = 1
_TAG_COM = 2
_TAG_THEOREM2 = 3
_TAG_ONCE = 4


@dataclass(frozen=True)
class MetricRow:
    sweep_value: float
    rrmse_tau: float
    rrmse_nu: float
    success_rate: float
    mean_runtime_s: float
    trials: int


@dataclass(frozen=True)
class TrialDetail:
    ok: bool
    rrmse_tau: float
    rrmse_nu: float
    failed_stage: str | None = None


def _seed(master: int, *key) -> np.random.SeedSequence:
    return np.random.SeedSequence(master, spawn_key=tuple(int(k) for k in key))


def _sweep_matrix(cfg: RunConfig, params: RadarParams):
    seed = cfg.raw["mat"]["seed"]
    if seed is None:
        seed = _seed(cfg.master_seed, _TAG_MATRIX, 0)
    return make_matrix(cfg.mat_kind, params.M, params.N, seed=seed,
                       normalize_fourier=bool(cfg.raw["mat"]["normalize_fourier"]))


def _trial_matrix(cfg: RunConfig, params: RadarParams, fixed, child):
    if cfg.raw["mat"]["fresh_per_trial"]:
        return make_matrix(cfg.mat_kind, params.M, params.N, seed=child,
                           normalize_fourier=bool(cfg.raw["mat"]["normalize_fourier"]))
    return fixed


def sample_separated_scene(rng, params: RadarParams, K: int, delay_span,
                           doppler_span, amp_range=(0.1, 1.0),
                           min_dtau: float = None, min_dnu: float = None,
                           max_rejects: int = 100_000) -> Scene:
    """K single-Doppler targets with enforced pairwise separations.

    Delays and Dopplers are uniform on their spans, amplitudes uniform in
    modulus with uniform phase; whole draws are rejected until both the
    delay and Doppler separation floors hold.
    """
    min_dtau = 2.0 * params.tau0 if min_dtau is None else min_dtau
    min_dnu = 2.0 * params.nu0 if min_dnu is None else min_dnu
    t_lo, t_hi = delay_span
    n_lo, n_hi = doppler_span
    for _ in range(max_rejects):
        taus = rng.uniform(t_lo, t_hi, size=K)
        nus = rng.uniform(n_lo, n_hi, size=K)
        if K > 1:
            if np.min(np.diff(np.sort(taus))) < min_dtau:
                continue
            if np.min(np.diff(np.sort(nus))) < min_dnu:
                continue
        amps = rng.uniform(amp_range[0], amp_range[1], size=K)
        phases = np.exp(2j * np.pi * rng.uniform(0.0, 1.0, size=K))
        targets = [Target(tau=float(t), nu=float(n), alpha=complex(a * p))
                   for t, n, a, p in zip(taus, nus, amps, phases)]
        return Scene.from_targets(targets)
    raise ConfigError(
        f"scene sampling rejected {max_rejects} times; separations infeasible")


def _noise_for(R: np.ndarray, snr_db: float, params: RadarParams, seed):
    if snr_db is None or snr_db == math.inf:
        return None
    sigma2 = derive_noise_psd(R, snr_db, params) * params.B
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(R.shape) + 1j * rng.standard_normal(R.shape)
    return np.sqrt(sigma2 / 2.0) * w


def _aggregate(value: float, details, pooled: PooledError, runtimes,
               trials: int) -> MetricRow:
    ok = sum(1 for d in details if d.ok)
    mean_rt = float(np.mean(runtimes)) if runtimes else math.nan
    return MetricRow(sweep_value=float(value), rrmse_tau=pooled.rrmse_tau,
                     rrmse_nu=pooled.rrmse_nu,
                     success_rate=ok / trials if trials else math.nan,
                     mean_runtime_s=mean_rt, trials=trials)


def _run_timed(S, mat, pulse, params, pcfg, timing: bool):
    if not timing:
        return run(S, mat, pulse, params, pcfg), None
    t0 = time.perf_counter()
    report = run(S, mat, pulse, params, pcfg)
    return report, time.perf_counter() - t0


def _match_trial(report, truth, K: int, params) -> MatchResult | None:
    """Detected-vs-truth match, or None when the trial failed outright."""
    if report.failed_stage is not None:
        return None
    detected = report.diagnostics.get("detected", report.flat)
    if len(detected) != K:
        return None
    est = [(t, n) for t, n, _ in detected]
    return match_and_rrmse(est, [(t.tau, t.nu) for t in truth], params)


def sweep_snr(cfg: RunConfig, values=None, trials=None):
    """RRMSE versus SNR on freshly drawn separated scenes (one row per point)."""
    params = cfg.radar
    pulse = lfm_pulse(params)
    sc = cfg.raw["scene"]
    K = int(sc["K"])
    sweep = cfg.raw["snr_sweep"]
    values = sweep["values"] if values is None else values
    trials = int(sweep["trials"] if trials is None else trials)
    fixed = _sweep_matrix(cfg, params)
    pcfg = cfg.pipeline_config(K_tau=K, K_per_class=1, detection_K=K)
    rows, details_out = [], []
    for p_idx, snr_db in enumerate(values):
        snr_db = float(snr_db)
        pooled, details, runtimes = PooledError(), [], []
        for t_idx in range(trials):
            children = _seed(cfg.master_seed, _TAG_TRIAL, p_idx, t_idx).spawn(4)
            rng = np.random.default_rng(children[0])
            scene = sample_separated_scene(
                rng, params, K, cfg.scene_delay_span(), cfg.scene_doppler_span(),
                amp_range=tuple(sc["amp_range"]),
                min_dtau=float(sc["min_sep_tau"]) * params.tau0,
                min_dnu=float(sc["min_sep_nu"]) * params.nu0)
            mat = _trial_matrix(cfg, params, fixed, children[3])
            R = echo_matrix(scene, params)
            S = mat.data @ (R if (noise := _noise_for(R, snr_db, params, children[1])) is None
                            else R + noise)
            report, rt = _run_timed(S, mat, pulse, params, pcfg, cfg.timing)
            if rt is not None:
                runtimes.append(rt)
            match = _match_trial(report, scene.targets, K, params)
            if match is None:
                details.append(TrialDetail(False, math.nan, math.nan,
                                           report.failed_stage or "count"))
            else:
                pooled.add(match)
                details.append(TrialDetail(True, match.rrmse_tau, match.rrmse_nu))
        rows.append(_aggregate(snr_db, details, pooled, runtimes, trials))
        details_out.append(details)
    return rows, details_out


def _resolution_scene(rng, mode: str, delta: float, params: RadarParams,
                      delay_span, doppler_span):
    """Two principal targets delta resolution-cells apart, plus (in delay
    mode) the extra same-delay target that keeps the coefficient rows
    independent. Returns (scene, truth_targets, principal_count, pcfg_args)."""
    t_lo, t_hi = delay_span
    n_lo, n_hi = doppler_span
    phase = lambda: complex(np.exp(2j * np.pi * rng.uniform()))
    if mode == "ntd":
        gap = delta * params.tau0
        tau1 = rng.uniform(t_lo, max(t_lo + 1e-12, t_hi - gap))
        tau2 = tau1 + gap
        nu_c = rng.uniform(n_lo, n_hi)
        while True:
            nu_d = rng.uniform(n_lo, n_hi)
            if abs(nu_d - nu_c) >= 2.0 * params.nu0:
                break
        a1, a2, a3 = phase(), phase(), phase()
        scene = Scene(classes=(
            DelayClass(tau=float(tau1), members=((float(nu_c), a1),)),
            DelayClass(tau=float(tau2), members=((float(nu_c), a2), (float(nu_d), a3))),
        ))
        truth = [Target(tau1, nu_c, a1), Target(tau2, nu_c, a2), Target(tau2, nu_d, a3)]
        return scene, truth, 2, dict(K_tau=2, K_per_class=(1, 2), detection_K=3)
    if mode == "ndd":
        gap = delta * params.nu0
        nu1 = rng.uniform(n_lo, max(n_lo + 1e-12, n_hi - gap))
        nu2 = nu1 + gap
        tau = rng.uniform(t_lo, t_hi)
        a1, a2 = phase(), phase()
        scene = Scene(classes=(
            DelayClass(tau=float(tau), members=((float(nu1), a1), (float(nu2), a2))),
        ))
        truth = [Target(tau, nu1, a1), Target(tau, nu2, a2)]
        return scene, truth, 2, dict(K_tau=1, K_per_class=2, detection_K=2)
    raise ConfigError(f"unknown resolution mode {mode!r}")


def sweep_resolution(cfg: RunConfig, mode=None, values=None, trials=None):
    """Resolution study: sweep the normalized delay (ntd) or Doppler (ndd)
    spacing of two equal-amplitude targets; metrics cover the two principal
    targets only. A zero spacing is degenerate and yields a NaN row."""
    params = cfg.radar
    pulse = lfm_pulse(params)
    sweep = cfg.raw["resolution_sweep"]
    mode = (sweep["mode"] if mode is None else mode).lower()
    values = sweep["values"] if values is None else values
    trials = int(sweep["trials"] if trials is None else trials)
    snr_db = float(sweep["snr_db"])
    fixed = _sweep_matrix(cfg, params)
    rows, details_out = [], []
    for p_idx, delta in enumerate(values):
        delta = float(delta)
        if delta <= 0.0:
            rows.append(MetricRow(delta, math.nan, math.nan, math.nan, math.nan, 0))
            details_out.append([])
            continue
        pooled, details, runtimes = PooledError(), [], []
        for t_idx in range(trials):
            children = _seed(cfg.master_seed, _TAG_TRIAL, p_idx, t_idx).spawn(4)
            rng = np.random.default_rng(children[0])
            scene, truth, principal, pargs = _resolution_scene(
                rng, mode, delta, params, cfg.scene_delay_span(),
                cfg.scene_doppler_span())
            pcfg = cfg.pipeline_config(**pargs)
            mat = _trial_matrix(cfg, params, fixed, children[3])
            R = echo_matrix(scene, params)
            noise = _noise_for(R, snr_db, params, children[1])
            S = mat.data @ (R if noise is None else R + noise)
            report, rt = _run_timed(S, mat, pulse, params, pcfg, cfg.timing)
            if rt is not None:
                runtimes.append(rt)
            match = _match_trial(report, truth, len(truth), params)
            if match is None:
                details.append(TrialDetail(False, math.nan, math.nan,
                                           report.failed_stage or "count"))
            else:
                pooled.add(match, keep=range(principal))
                sq_t = match.sq_tau[:principal]
                sq_n = match.sq_nu[:principal]
                details.append(TrialDetail(True, float(np.sqrt(sq_t.mean())),
                                           float(np.sqrt(sq_n.mean()))))
        rows.append(_aggregate(delta, details, pooled, runtimes, trials))
        details_out.append(details)
    return rows, details_out


def sweep_clutter(cfg: RunConfig, values=None, trials=None, filter_on=None):
    """RRMSE versus signal-to-clutter ratio at fixed SNR.

    Target Dopplers are sampled outside the filter stopband (plus one bin
    of guard), clutter is scaled in the compressed domain per point, and
    the slow-time mask runs when filter_on. Seeds do not depend on
    filter_on, so on/off runs are paired trial-for-trial.
    """
    params = cfg.radar
    pulse = lfm_pulse(params)
    sc = cfg.raw["scene"]
    K = int(sc["K"])
    sweep = cfg.raw["clutter_sweep"]
    values = sweep["values"] if values is None else values
    trials = int(sweep["trials"] if trials is None else trials)
    snr_db = float(sweep["snr_db"])
    filter_on = bool(sweep["filter_on"]) if filter_on is None else bool(filter_on)
    cutoff = cfg.clutter_cutoff()
    lim = params.doppler_limit
    if cutoff + params.nu0 >= lim:
        raise ConfigError("stopband leaves no Doppler passband for targets")
    bin_w = cfg.clutter_bin_width()
    c_span = sweep["clutter_delay_span"]
    c_span = cfg.scene_delay_span() if c_span is None else (float(c_span[0]), float(c_span[1]))
    fixed = _sweep_matrix(cfg, params)
    # an empty scene still runs with detection forced, as a stress case
    pcfg = cfg.pipeline_config(K_tau=max(K, 1), K_per_class=1,
                               detection_K=max(K, 1),
                               clutter_filter=cutoff if filter_on else None)
    rows, details_out = [], []
    for p_idx, scr_db in enumerate(values):
        scr_db = float(scr_db)
        pooled, details, runtimes = PooledError(), [], []
        for t_idx in range(trials):
            children = _seed(cfg.master_seed, _TAG_TRIAL, p_idx, t_idx).spawn(4)
            rng = np.random.default_rng(children[0])
            scene = _passband_scene(rng, params, K, cfg, cutoff)
            mat = _trial_matrix(cfg, params, fixed, children[3])
            R = echo_matrix(scene, params)
            cp = ClutterParams(n_scatterers=int(sweep["n_scatterers"]),
                               scr_db=scr_db, doppler_bin_width=bin_w,
                               delay_span=c_span, seed=children[2])
            C = gen_clutter(params, cp, R if K else None, mat)
            noise = _noise_for(R, snr_db, params, children[1]) if K else None
            S = mat.data @ (R + C if noise is None else R + C + noise)
            report, rt = _run_timed(S, mat, pulse, params, pcfg, cfg.timing)
            if rt is not None:
                runtimes.append(rt)
            match = _match_trial(report, scene.targets, K, params)
            if match is None:
                details.append(TrialDetail(False, math.nan, math.nan,
                                           report.failed_stage or "count"))
            else:
                pooled.add(match)
                details.append(TrialDetail(True, match.rrmse_tau, match.rrmse_nu))
        rows.append(_aggregate(scr_db, details, pooled, runtimes, trials))
        details_out.append(details)
    return rows, details_out


def _passband_scene(rng, params, K, cfg: RunConfig, cutoff):
    """Separated scene whose Dopplers all clear the stopband by one bin."""
    sc = cfg.raw["scene"]
    guard = cutoff + params.nu0
    for _ in range(100_000):
        scene = sample_separated_scene(
            rng, params, K, cfg.scene_delay_span(), cfg.scene_doppler_span(),
            amp_range=tuple(sc["amp_range"]),
            min_dtau=float(sc["min_sep_tau"]) * params.tau0,
            min_dnu=float(sc["min_sep_nu"]) * params.nu0)
        if all(abs(t.nu) > guard for t in scene.targets):
            return scene
    raise ConfigError("could not place targets outside the stopband")


def sweep_theorem1(cfg: RunConfig):
    """Full-rank success rate of the compressed atom matrix versus M.

    Fresh matrix and fresh off-grid delay set per trial; also fits the
    failure-rate exponent in M (nan when no failures occur).
    """
    spec = cfg.raw["theorem1"]
    N = int(spec["N"])
    K_tau = int(spec["K_tau"])
    trials = int(spec["trials"])
    kind = spec["kind"]
    base = cfg.radar
    rows = []
    fails = []
    for p_idx, M in enumerate(spec["M_values"]):
        M = int(M)
        if not M < N:
            raise ConfigError(f"theorem1 needs M < N, got M={M}, N={N}")
        params = _params_for_N(base, N, M)
        pulse = lfm_pulse(params)
        ok = 0
        for t_idx in range(trials):
            children = _seed(cfg.master_seed, _TAG_TRIAL, p_idx, t_idx).spawn(2)
            mat = make_matrix(kind, M, N, seed=children[0])
            rng = np.random.default_rng(children[1])
            taus = rng.uniform(0.0, params.delay_limit, size=K_tau)
            Psi = np.column_stack([
                mdl.atom(float(t), params, "model_matched", pulse=pulse) for t in taus])
            if rank_check(mat, Psi).full_rank:
                ok += 1
        rate = ok / trials
        fails.append((M, 1.0 - rate))
        rows.append(MetricRow(sweep_value=float(M), rrmse_tau=math.nan,
                              rrmse_nu=math.nan, success_rate=rate,
                              mean_runtime_s=math.nan, trials=trials))
    pts = [(m, f) for m, f in fails if f > 0.0]
    if len(pts) >= 2:
        ms = np.array([p[0] for p in pts], dtype=float)
        lf = np.log([p[1] for p in pts])
        exponent = float(-np.polyfit(ms, lf, 1)[0])
    else:
        exponent = math.nan
    return rows, exponent


def _params_for_N(base: RadarParams, N: int, M: int) -> RadarParams:
    """Same bandwidth and pulse duty cycle, rescaled to an N-sample PRI."""
    T = N / base.B
    T_p = max(T * (base.T_p / base.T), 2.0 / base.B)
    return RadarParams(B=base.B, T=T, T_p=T_p, L=8, M=M)


def theorem2_battery(cfg: RunConfig):
    """Coefficient-rank verifier on constructed scenes.

    Row 0: coherent scenes (one shared Doppler across classes) and the rate
    at which they are rejected. Row 1: scenes satisfying the one-distinct-
    Doppler-per-class hypothesis and the rate at which they pass.
    """
    spec = cfg.raw["theorem2"]
    trials = int(spec["trials"])
    K_tau = int(spec["K_tau"])
    size = int(spec["class_size"])
    params = cfg.radar
    lim = params.doppler_limit
    rejected = passed = 0
    for t_idx in range(trials):
        rng = np.random.default_rng(_seed(cfg.master_seed, _TAG_THEOREM2, t_idx))
        # coherent: every class is the same single Doppler, amplitudes scaled
        nu = float(rng.uniform(-lim, lim))
        base_alpha = complex(np.exp(2j * np.pi * rng.uniform()))
        coherent = [DelayClass(tau=float(i) * params.tau0 * 3,
                               members=((nu, base_alpha * (1.0 + i)),))
                    for i in range(K_tau)]
        theta_c = np.vstack([coeff_sequence(c, params) for c in coherent])
        if not theorem2_check(theta_c).full_rank:
            rejected += 1
        # hypothesis: all Dopplers globally distinct, random phases
        while True:
            nus = rng.uniform(-lim, lim, size=K_tau * size)
            if nus.size < 2 or np.min(np.diff(np.sort(nus))) > 1e-3 * params.nu0:
                break
        classes = []
        for i in range(K_tau):
            members = tuple(
                (float(nus[i * size + j]), complex(np.exp(2j * np.pi * rng.uniform())))
                for j in range(size))
            classes.append(DelayClass(tau=float(i) * params.tau0 * 3, members=members))
        theta_h = np.vstack([coeff_sequence(c, params) for c in classes])
        if theorem2_check(theta_h).full_rank:
            passed += 1
    rows = [
        MetricRow(0.0, math.nan, math.nan, rejected / trials, math.nan, trials),
        MetricRow(1.0, math.nan, math.nan, passed / trials, math.nan, trials),
    ]
    return rows


def com_battery(cfg: RunConfig):
    """Norm-concentration tails across a doubling ladder of M values."""
    spec = cfg.raw["com"]
    rows, reports = [], []
    for p_idx, M in enumerate(spec["M_values"]):
        rep = com_test(spec["kind"], int(M), int(spec["N"]),
                       float(spec["epsilon"]), int(spec["trials"]),
                       seed=_seed(cfg.master_seed, _TAG_COM, p_idx))
        reports.append(rep)
        rows.append(MetricRow(sweep_value=float(M), rrmse_tau=math.nan,
                              rrmse_nu=math.nan,
                              success_rate=1.0 - rep.empirical_tail,
                              mean_runtime_s=math.nan, trials=rep.trials))
    return rows, reports


def run_once(cfg: RunConfig):
    """One fully diagnosed trial on an explicit or freshly drawn scene."""
    params = cfg.radar
    pulse = lfm_pulse(params)
    spec = cfg.raw["run_once"]
    children = _seed(cfg.master_seed, _TAG_ONCE).spawn(4)
    sc = cfg.raw["scene"]
    if spec["targets"] is not None:
        targets = [Target(tau=float(t[0]), nu=float(t[1]),
                          alpha=complex(float(t[2]), float(t[3])))
                   for t in spec["targets"]]
        scene = Scene.from_targets(targets)
    else:
        rng = np.random.default_rng(children[0])
        scene = sample_separated_scene(
            rng, params, int(sc["K"]), cfg.scene_delay_span(),
            cfg.scene_doppler_span(), amp_range=tuple(sc["amp_range"]),
            min_dtau=float(sc["min_sep_tau"]) * params.tau0,
            min_dnu=float(sc["min_sep_nu"]) * params.nu0)
    scene.validate(params)
    mat = _sweep_matrix(cfg, params)
    R = echo_matrix(scene, params)
    snr_db = math.inf if spec["snr_db"] is None else float(spec["snr_db"])
    scr_db = spec["scr_db"]
    total = R
    cutoff = None
    if scr_db is not None:
        cutoff = cfg.clutter_cutoff()
        sweep = cfg.raw["clutter_sweep"]
        cp = ClutterParams(n_scatterers=int(sweep["n_scatterers"]),
                           scr_db=float(scr_db),
                           doppler_bin_width=cfg.clutter_bin_width(),
                           delay_span=cfg.scene_delay_span(), seed=children[2])
        total = R + gen_clutter(params, cp, R, mat)
    noise = _noise_for(R, snr_db, params, children[1])
    S = mat.data @ (total if noise is None else total + noise)
    counts = tuple(c.size for c in scene.classes)
    pcfg = cfg.pipeline_config(K_tau=scene.K_tau, K_per_class=counts,
                               detection_K=scene.K, clutter_filter=cutoff)
    report = run(S, mat, pulse, params, pcfg)
    return report, scene, mat
