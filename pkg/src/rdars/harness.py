"""Monte Carlo experiment runner for the uplink and ISAC comparisons.

Every scheme at a given trial index sees the same channel realization
(paired trials). Per-trial generators are derived from ``(base_seed, trial)``
so results do not depend on how trials are distributed over workers, and
aggregation always runs in ascending trial order.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Dict, List, Optional, Tuple

import numpy as np

from rdars.channel import ChannelSet, dbm_to_watt, generate_isac_channels, generate_uplink_channels
from rdars.config import ExperimentConfig
from rdars.core import ModeSelection, PhaseProfile, gain_decomposition
from rdars.errors import ConfigError, InfeasibleError
from rdars.isac import (evaluate_das, evaluate_isac, make_phase_cache, solve_fixed_mode,
                        solve_p2)
from rdars.optimize import best_phases_for_mode, random_mode, solve_p1, top_indices

log = logging.getLogger(__name__)

# fixed stream ids so a scheme's random draws do not depend on the scheme list
_SCHEME_STREAM = {"rdars_opt": 0, "rdars_rand_index": 1, "rdars_rand_phase": 2,
                  "das": 3, "passive_ris": 4}
_CHANNEL_STREAM = 100

CSV_COLUMNS = (
    "scenario", "scheme", "tx_power_dbm", "n_total", "n_connected", "trials",
    "feasible_trials", "mean_rate_bpshz", "std_rate_bpshz", "mean_comm_snr_db",
    "mean_radar_snr_db", "mean_gain_reflection", "mean_gain_distribution",
    "mean_gain_selection", "base_seed",
)


@dataclass(frozen=True)
class ResultRow:
    """One aggregated (scheme, a, power) point. Inapplicable metrics are None."""

    scenario: str
    scheme: str
    tx_power_dbm: float
    n_total: int
    n_connected: int
    trials: int
    feasible_trials: int
    mean_rate_bpshz: Optional[float]
    std_rate_bpshz: Optional[float]
    mean_comm_snr_db: Optional[float]
    mean_radar_snr_db: Optional[float]
    mean_gain_reflection: Optional[float]
    mean_gain_distribution: Optional[float]
    mean_gain_selection: Optional[float]
    base_seed: int

    @property
    def sort_key(self):
        return (self.scheme, self.n_connected, self.tx_power_dbm)


def trial_rng(base_seed: int, trial: int, *stream: int) -> np.random.Generator:
    seq = np.random.SeedSequence(base_seed, spawn_key=(trial,) + tuple(stream))
    return np.random.default_rng(seq)


def trial_channels(config: ExperimentConfig, trial: int) -> ChannelSet:
    rng = trial_rng(config.base_seed, trial, _CHANNEL_STREAM)
    gen = generate_uplink_channels if config.scenario == "uplink" else generate_isac_channels
    return gen(config.geometry, config.fading, config.M, config.N, rng)


def _scheme_rng(config, trial, scheme, a):
    return trial_rng(config.base_seed, trial, _SCHEME_STREAM[scheme], a)


def _scheme_keys(config: ExperimentConfig) -> List[Tuple[str, int]]:
    keys = []
    for scheme in config.schemes:
        if scheme == "passive_ris":
            keys.append((scheme, 0))
        else:
            keys.extend((scheme, a) for a in config.a_values)
    return keys


# -- uplink -------------------------------------------------------------------

def uplink_trial(config: ExperimentConfig, trial: int) -> Dict:
    """Power-independent results of one trial.

    Returns ``{"digest": str, "results": {(scheme, a): (gain, R, D, S)}}`` where
    ``gain = ||h_b||^2 + ||h_c||^2`` so the SNR at power p is ``p / sigma^2 * gain``.
    """
    ch = trial_channels(config, trial)
    digest = ch.digest()
    log.debug("trial %d uses channel %s", trial, digest)
    opts = config.optimizer
    n_el = config.N
    wanted = set(_scheme_keys(config))
    out = {}

    def decompose(phases, mode, a):
        d = gain_decomposition(ch, phases, mode, ModeSelection.default(n_el, a), 1.0, 1.0)
        return (d.total_snr, d.reflection_gain, d.distribution_gain, d.selection_gain)

    if ("passive_ris", 0) in wanted:
        empty = ModeSelection(n_el)
        phases, _ = best_phases_for_mode(ch, empty, opts)
        out[("passive_ris", 0)] = decompose(phases, empty, 0)
    for a in config.a_values:
        need_opt = ("rdars_opt", a) in wanted or ("rdars_rand_phase", a) in wanted
        if need_opt:
            sol = solve_p1(ch, a, opts)
            if ("rdars_opt", a) in wanted:
                out[("rdars_opt", a)] = decompose(sol.phases, sol.mode, a)
        if ("rdars_rand_index", a) in wanted:
            mode = random_mode(n_el, a, _scheme_rng(config, trial, "rdars_rand_index", a))
            phases, _ = best_phases_for_mode(ch, mode, opts)
            out[("rdars_rand_index", a)] = decompose(phases, mode, a)
        if ("rdars_rand_phase", a) in wanted:
            phases = PhaseProfile.random(n_el, _scheme_rng(config, trial, "rdars_rand_phase", a))
            out[("rdars_rand_phase", a)] = decompose(phases, sol.mode, a)
        if ("das", a) in wanted:
            direct = float(np.vdot(ch.h_d, ch.h_d).real)
            dist = float(np.sum(np.abs(ch.h_r[:a]) ** 2))
            out[("das", a)] = (direct + dist, direct, dist, 0.0)
    return {"digest": digest, "results": out}


def _rate_stats(rates):
    rates = np.asarray(rates, dtype=float)
    if rates.size == 0:
        return None, None
    std = float(np.std(rates, ddof=1)) if rates.size > 1 else 0.0
    return float(np.mean(rates)), std


def _to_db(x):
    return None if x is None or not x > 0 else 10.0 * math.log10(x)


def _aggregate_uplink(config, trials) -> List[ResultRow]:
    rows = []
    sigma2 = config.noise_power
    for scheme, a in _scheme_keys(config):
        records = np.array([t["results"][(scheme, a)] for t in trials])
        gains = records[:, 0]
        means = records[:, 1:].mean(axis=0)
        for p_dbm in config.power_sweep_dbm:
            snr = dbm_to_watt(p_dbm) / sigma2 * gains
            mean_rate, std_rate = _rate_stats(np.log2(1.0 + snr))
            rows.append(ResultRow(
                scenario="uplink", scheme=scheme, tx_power_dbm=float(p_dbm), n_total=config.N,
                n_connected=a, trials=len(trials), feasible_trials=len(trials),
                mean_rate_bpshz=mean_rate, std_rate_bpshz=std_rate, mean_comm_snr_db=None,
                mean_radar_snr_db=None, mean_gain_reflection=float(means[0]),
                mean_gain_distribution=float(means[1]), mean_gain_selection=float(means[2]),
                base_seed=config.base_seed))
    return rows


# -- ISAC ---------------------------------------------------------------------

def isac_trial(config: ExperimentConfig, trial: int) -> Dict:
    """Per-power results: ``{(scheme, a, power_index): (radar_snr, comm_snr) or None}``."""
    ch = trial_channels(config, trial)
    digest = ch.digest()
    log.debug("trial %d uses channel %s", trial, digest)
    opts = config.optimizer
    n_el = config.N
    sigma2, alpha, gth = config.noise_power, config.alpha, config.gamma_th
    wanted = set(_scheme_keys(config))
    cache = make_phase_cache(ch, opts)
    out = {}

    def record(key, fn):
        try:
            sol = fn()
        except InfeasibleError:
            out[key] = None
            return None
        out[key] = (sol.radar_snr, sol.comm_snr)
        return sol

    draws = {}
    for a in config.a_values:
        draws[("rdars_rand_index", a)] = random_mode(
            n_el, a, _scheme_rng(config, trial, "rdars_rand_index", a))
        draws[("rdars_rand_phase", a)] = PhaseProfile.random(
            n_el, _scheme_rng(config, trial, "rdars_rand_phase", a))

    for k, p_dbm in enumerate(config.power_sweep_dbm):
        p = dbm_to_watt(p_dbm)
        if ("passive_ris", 0) in wanted:
            record(("passive_ris", 0, k), lambda: solve_p2(ch, 0, p, gth, alpha, sigma2, opts, cache))
        for a in config.a_values:
            opt_mode = None
            if ("rdars_opt", a) in wanted or ("rdars_rand_phase", a) in wanted:
                try:
                    sol = solve_p2(ch, a, p, gth, alpha, sigma2, opts, cache)
                    opt_mode = sol.mode
                    if ("rdars_opt", a) in wanted:
                        out[("rdars_opt", a, k)] = (sol.radar_snr, sol.comm_snr)
                except InfeasibleError:
                    if ("rdars_opt", a) in wanted:
                        out[("rdars_opt", a, k)] = None
            if ("rdars_rand_index", a) in wanted:
                mode = draws[("rdars_rand_index", a)]
                record(("rdars_rand_index", a, k),
                       lambda: solve_fixed_mode(ch, mode, p, gth, alpha, sigma2, opts, cache))
            if ("rdars_rand_phase", a) in wanted:
                mode = opt_mode or ModeSelection(n_el, top_indices(np.abs(ch.t_r) ** 2, a))
                phases = draws[("rdars_rand_phase", a)]
                record(("rdars_rand_phase", a, k),
                       lambda: evaluate_isac(ch, mode, phases, p, gth, alpha, sigma2))
            if ("das", a) in wanted:
                record(("das", a, k), lambda: evaluate_das(ch, ModeSelection.default(n_el, a),
                                                           p, gth, alpha, sigma2))
    return {"digest": digest, "results": out}


def _aggregate_isac(config, trials) -> List[ResultRow]:
    rows = []
    for scheme, a in _scheme_keys(config):
        for k, p_dbm in enumerate(config.power_sweep_dbm):
            vals = [t["results"][(scheme, a, k)] for t in trials]
            ok = np.array([v for v in vals if v is not None], dtype=float).reshape(-1, 2)
            n_ok = ok.shape[0]
            mean_rate, std_rate = _rate_stats(np.log2(1.0 + ok[:, 1]))
            rows.append(ResultRow(
                scenario="isac", scheme=scheme, tx_power_dbm=float(p_dbm), n_total=config.N,
                n_connected=a, trials=len(trials), feasible_trials=n_ok,
                mean_rate_bpshz=mean_rate, std_rate_bpshz=std_rate,
                mean_comm_snr_db=_to_db(float(ok[:, 1].mean())) if n_ok else None,
                mean_radar_snr_db=_to_db(float(ok[:, 0].mean())) if n_ok else None,
                mean_gain_reflection=None, mean_gain_distribution=None,
                mean_gain_selection=None, base_seed=config.base_seed))
    return rows


# -- drivers ------------------------------------------------------------------

def _run_trials(fn, config: ExperimentConfig, workers: int) -> List[Dict]:
    if workers < 1:
        raise ConfigError("workers must be at least 1")
    idx = range(config.trials)
    job = partial(fn, config)
    if workers == 1:
        return [job(i) for i in idx]
    chunk = max(1, config.trials // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, idx, chunksize=chunk))


def run_uplink_experiment(config: ExperimentConfig, workers: int = 1) -> List[ResultRow]:
    if config.scenario != "uplink":
        raise ConfigError("scenario: run_uplink_experiment needs scenario = uplink")
    trials = _run_trials(uplink_trial, config, workers)
    return sorted(_aggregate_uplink(config, trials), key=lambda r: r.sort_key)


def run_isac_experiment(config: ExperimentConfig, workers: int = 1) -> List[ResultRow]:
    if config.scenario != "isac":
        raise ConfigError("scenario: run_isac_experiment needs scenario = isac")
    trials = _run_trials(isac_trial, config, workers)
    return sorted(_aggregate_isac(config, trials), key=lambda r: r.sort_key)


def run_experiment(config: ExperimentConfig, workers: int = 1) -> List[ResultRow]:
    if config.scenario == "uplink":
        return run_uplink_experiment(config, workers)
    return run_isac_experiment(config, workers)


# -- CSV ----------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def rows_to_csv(rows: List[ResultRow]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(_fmt(getattr(row, c)) for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"
