"""RDARS-aided ISAC: downlink communication SNR, radar echo SNR and the QoS-constrained design.

The BS antennas and the connection-mode elements jointly transmit one ISAC
symbol through the stacked beamformer ``f = [f_b; f_r]``. Only the BS
antennas receive the target echo, so the receive filter ``w`` sees the
reflection-path channel ``t_b`` alone.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from rdars.channel import ChannelSet
from rdars.core import ModeSelection, PhaseProfile, cascaded_terms, reflected_channel
from rdars.errors import ConfigError, DegenerateChannelError, InfeasibleError
from rdars.optimize import (
    OptimizerOptions,
    _best_over_modes,
    refined_starts,
    swap_neighbours,
    top_indices,
    uses_exhaustive,
)

FEASIBILITY_RTOL = 1e-9
# modes refined per solve: at most REFINE_TOP once one is feasible, INFEASIBLE_TRIES overall
REFINE_TOP = 8
INFEASIBLE_TRIES = 32


@dataclass(frozen=True, eq=False)
class IsacEffectiveChannels:
    u: np.ndarray
    t_b: np.ndarray
    t_c: np.ndarray

    @property
    def t(self) -> np.ndarray:
        return np.concatenate([self.t_b, self.t_c])

    @property
    def M(self) -> int:
        return self.t_b.shape[0]


@dataclass(frozen=True, eq=False)
class IsacBeamformer:
    f_b: np.ndarray
    f_r: np.ndarray
    w: np.ndarray

    @property
    def f(self) -> np.ndarray:
        return np.concatenate([self.f_b, self.f_r])

    @property
    def power(self) -> float:
        f = self.f
        return float(np.vdot(f, f).real)


@dataclass(eq=False)
class IsacSolution:
    phases: PhaseProfile
    mode: ModeSelection
    beamformer: IsacBeamformer
    comm_snr: float
    radar_snr: float
    radar_trace: List[float] = field(default_factory=list)


def isac_effective_channels(channels: ChannelSet, mode: ModeSelection,
                            phases: PhaseProfile) -> IsacEffectiveChannels:
    if not channels.is_isac:
        raise ConfigError("ISAC channels (u_d, u_r, t_d, t_r) are missing")
    idx = list(mode.connected)
    u_b = reflected_channel(channels.u_d, channels.G, channels.u_r, mode, phases)
    t_b = reflected_channel(channels.t_d, channels.G, channels.t_r, mode, phases)
    return IsacEffectiveChannels(u=np.concatenate([u_b, channels.u_r[idx]]),
                                 t_b=t_b, t_c=channels.t_r[idx])


def das_effective_channels(channels: ChannelSet, mode: ModeSelection) -> IsacEffectiveChannels:
    """Distributed antennas only: connection paths plus the direct BS links, no reflection."""
    idx = list(mode.connected)
    return IsacEffectiveChannels(u=np.concatenate([channels.u_d, channels.u_r[idx]]),
                                 t_b=channels.t_d.copy(), t_c=channels.t_r[idx])


def _check_noise(noise_power):
    if not noise_power > 0:
        raise ConfigError(f"noise_power must be positive, got {noise_power}")


def comm_snr(u: np.ndarray, f: np.ndarray, noise_power: float) -> float:
    _check_noise(noise_power)
    if u.shape != f.shape:
        raise ConfigError(f"u has shape {u.shape} but f has shape {f.shape}")
    return abs(np.vdot(u, f)) ** 2 / noise_power


def radar_snr(ch: IsacEffectiveChannels, bf: IsacBeamformer, alpha: complex,
              noise_power: float) -> float:
    """``|alpha|^2 |w^H t_b|^2 |t^H f|^2 / (sigma^2 ||w||^2)``."""
    _check_noise(noise_power)
    w_norm2 = float(np.vdot(bf.w, bf.w).real)
    if w_norm2 == 0:
        raise DegenerateChannelError("receive filter w is all-zero")
    echo = abs(np.vdot(bf.w, ch.t_b)) ** 2
    illum = abs(np.vdot(ch.t_b, bf.f_b) + np.vdot(ch.t_c, bf.f_r)) ** 2
    return abs(alpha) ** 2 * echo * illum / (noise_power * w_norm2)


def radar_snr_mrc_mrt(ch: IsacEffectiveChannels, tx_power: float, alpha: complex,
                      noise_power: float) -> float:
    """Radar SNR when the BS combines with ``w = t_b`` and transmits MRT on ``t``."""
    _check_noise(noise_power)
    tb2 = float(np.vdot(ch.t_b, ch.t_b).real)
    if tb2 == 0:
        raise DegenerateChannelError("t_b is all-zero")
    tc2 = float(np.vdot(ch.t_c, ch.t_c).real)
    return tx_power / noise_power * abs(alpha) ** 2 * (tb2 + tc2) * tb2


def radar_snr_mrc_mrt_expanded(t_b: np.ndarray, t_r: np.ndarray, mode: ModeSelection,
                               tx_power: float, alpha: complex, noise_power: float) -> float:
    """Same quantity written as ``||t_b||^4 + sum_n a_n |t_r[n]|^2 ||t_b||^2``."""
    _check_noise(noise_power)
    tb2 = float(np.vdot(t_b, t_b).real)
    if tb2 == 0:
        raise DegenerateChannelError("t_b is all-zero")
    conn = float(mode.diagonal @ (np.abs(t_r) ** 2))
    return tx_power / noise_power * abs(alpha) ** 2 * (tb2 ** 2 + conn * tb2)


# -- QoS-constrained transmit beamformer -------------------------------------

def qos_illumination(u_norm2, t_norm2, ut_abs2, tx_power, gamma_th, noise_power):
    """Largest ``|t^H f|^2`` subject to ``|u^H f|^2 >= gamma_th sigma^2`` and ``||f||^2 = p``.

    Works elementwise on arrays of channel statistics; infeasible entries are NaN.
    """
    u_norm2 = np.asarray(u_norm2, dtype=float)
    t_norm2 = np.asarray(t_norm2, dtype=float)
    ut_abs2 = np.asarray(ut_abs2, dtype=float)
    need = gamma_th * noise_power
    with np.errstate(divide="ignore", invalid="ignore"):
        feasible = tx_power * u_norm2 >= need * (1 - FEASIBILITY_RTOL)
        mrt_comm = np.where(t_norm2 > 0, tx_power * ut_abs2 / t_norm2, 0.0)
        along = np.where(u_norm2 > 0, ut_abs2 / u_norm2, 0.0)   # |tau_1|^2
        across = np.maximum(t_norm2 - along, 0.0)                # tau_2^2
        cos2 = np.clip(np.where(u_norm2 > 0, need / (tx_power * u_norm2), 1.0), 0.0, 1.0)
        boundary = tx_power * (np.sqrt(along * cos2) + np.sqrt(across * (1 - cos2))) ** 2
        value = np.where(mrt_comm >= need, tx_power * t_norm2, boundary)
    return np.where(feasible, value, np.nan)


def _golden_section_max(fn, lo, hi, tol=1e-10):
    inv_phi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - inv_phi * (b - a), a + inv_phi * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = fn(d)
    return (a + b) / 2


def _split(f: np.ndarray, n_bs: int, w: np.ndarray) -> IsacBeamformer:
    return IsacBeamformer(f_b=f[:n_bs].copy(), f_r=f[n_bs:].copy(), w=w)


def optimize_beamformer_qos(u: np.ndarray, t: np.ndarray, tx_power: float, gamma_th: float,
                            noise_power: float, n_bs: Optional[int] = None,
                            w: Optional[np.ndarray] = None) -> IsacBeamformer:
    """Maximize ``|t^H f|^2`` under the user QoS and the transmit power budget.

    The optimum lies in span{u, t}. With ``e1 = u/||u||`` and ``e2`` the
    normalized component of ``t`` orthogonal to ``u``, the beamformer is
    ``sqrt(p) (cos b e^{j phi} e1 + sin b e2)``; phi aligns both terms of
    ``t^H f`` and b is either the MRT angle (QoS inactive) or the largest
    angle that still meets the QoS.

    ``n_bs`` splits ``f`` into BS and connection parts (default: all BS);
    ``w`` defaults to the BS part of ``t``.
    """
    _check_noise(noise_power)
    u = np.asarray(u, dtype=complex)
    t = np.asarray(t, dtype=complex)
    if u.shape != t.shape:
        raise ConfigError("u and t must have the same length")
    n_bs = u.shape[0] if n_bs is None else n_bs
    w = t[:n_bs].copy() if w is None else w
    need = gamma_th * noise_power
    u_norm = float(np.linalg.norm(u))
    t_norm = float(np.linalg.norm(t))
    if tx_power * u_norm ** 2 < need * (1 - FEASIBILITY_RTOL) or (u_norm == 0 and need > 0):
        raise InfeasibleError(
            f"QoS {gamma_th:.6g} unreachable: max comm SNR {tx_power * u_norm ** 2 / noise_power:.6g}")
    sqrt_p = math.sqrt(tx_power)
    if t_norm > 0:
        mrt = sqrt_p * t / t_norm
        if abs(np.vdot(u, mrt)) ** 2 >= need:
            return _split(mrt, n_bs, w)
    e1 = u / u_norm
    tau1 = np.vdot(e1, t)
    resid = t - tau1 * e1
    tau2 = float(np.linalg.norm(resid))
    phase = np.exp(1j * np.angle(tau1)) if abs(tau1) > 0 else 1.0
    if tau2 <= 1e-12 * max(t_norm, 1e-300):
        return _split(sqrt_p * phase * e1, n_bs, w)
    e2 = resid / tau2
    ratio = need / (tx_power * u_norm ** 2)
    beta = math.acos(math.sqrt(min(1.0, ratio * (1 + 1e-12))))

    def build(b):
        return sqrt_p * (math.cos(b) * phase * e1 + math.sin(b) * e2)

    f = build(beta)
    if not (np.isfinite(beta) and abs(np.vdot(u, f)) ** 2 >= need * (1 - FEASIBILITY_RTOL)):
        # numerically degenerate boundary: search the feasible arc directly
        def score(b):
            cand = build(b)
            ok = abs(np.vdot(u, cand)) ** 2 >= need
            return abs(np.vdot(t, cand)) ** 2 if ok else -1.0
        f = build(_golden_section_max(score, 0.0, math.pi / 2))
    return _split(f, n_bs, w)


# -- joint design -------------------------------------------------------------

class _SubsetPhases:
    """Per-subset phase designs for one ISAC realization, computed in batches and cached.

    ``radar`` phases maximize ||t_b||^2; ``user`` phases maximize ||u_b||^2 and
    serve as a fallback when the radar-oriented profile leaves the QoS infeasible.
    """

    def __init__(self, channels: ChannelSet, opts: OptimizerOptions):
        self.channels = channels
        self.opts = opts
        ch = channels
        self._problems = {
            "radar": (ch.t_d, cascaded_terms(ch.G, ch.t_r), np.abs(ch.t_r) ** 2),
            "user": (ch.u_d, cascaded_terms(ch.G, ch.u_r), np.abs(ch.u_r) ** 2),
        }
        self._cache: Dict[Tuple[str, tuple], np.ndarray] = {}
        self._starts: Dict[str, np.ndarray] = {}

    def get(self, kind: str, subsets: Sequence[tuple]) -> np.ndarray:
        missing = [s for s in dict.fromkeys(subsets) if (kind, s) not in self._cache]
        if missing:
            base, terms, extra = self._problems[kind]
            if kind not in self._starts:
                self._starts[kind] = refined_starts(base, terms, self.opts)
            theta, _, _ = _best_over_modes(base, terms, extra, missing,
                                           self._starts[kind], self.opts)
            for s, th in zip(missing, theta):
                self._cache[(kind, s)] = th
        return np.array([self._cache[(kind, s)] for s in subsets])

    def stats(self, subsets: Sequence[tuple], theta: np.ndarray):
        """(||u||^2, ||t||^2, |u^H t|^2, ||t_b||^2) for each subset with its phases."""
        ch = self.channels
        n_el = ch.N
        refl = np.ones((len(subsets), n_el), dtype=bool)
        for k, s in enumerate(subsets):
            refl[k, list(s)] = False
        masked = np.where(refl, theta, 0.0)
        u_b = ch.u_d + masked @ cascaded_terms(ch.G, ch.u_r)
        t_b = ch.t_d + masked @ cascaded_terms(ch.G, ch.t_r)
        conn = ~refl
        u_c = np.where(conn, ch.u_r, 0.0)
        t_c = np.where(conn, ch.t_r, 0.0)
        u2 = np.sum(np.abs(u_b) ** 2, axis=1) + np.sum(np.abs(u_c) ** 2, axis=1)
        tb2 = np.sum(np.abs(t_b) ** 2, axis=1)
        t2 = tb2 + np.sum(np.abs(t_c) ** 2, axis=1)
        ut = np.sum(u_b.conj() * t_b, axis=1) + np.sum(u_c.conj() * t_c, axis=1)
        return u2, t2, np.abs(ut) ** 2, tb2


def _score(cache, subsets, theta, tx_power, gamma_th, alpha, noise_power):
    u2, t2, ut2, tb2 = cache.stats(subsets, theta)
    illum = qos_illumination(u2, t2, ut2, tx_power, gamma_th, noise_power)
    return abs(alpha) ** 2 * tb2 * illum / noise_power


def _qos_active(cache, subsets, theta, tx_power, gamma_th, noise_power):
    u2, t2, ut2, _ = cache.stats(subsets, theta)
    return tx_power * ut2 < gamma_th * noise_power * t2


def _score_with_fallback(cache, subsets, tx_power, gamma_th, alpha, noise_power):
    """Radar score per subset with the better of the radar- and user-oriented phases.

    User-oriented phases are only tried where the radar-oriented ones leave the
    QoS constraint active (or infeasible); otherwise radar phases are optimal
    for the subset's phase design.
    """
    theta = cache.get("radar", subsets)
    score = _score(cache, subsets, theta, tx_power, gamma_th, alpha, noise_power)
    score = np.where(np.isnan(score), -np.inf, score)
    idx = np.flatnonzero(_qos_active(cache, subsets, theta, tx_power, gamma_th, noise_power))
    if idx.size:
        sub = [subsets[k] for k in idx]
        alt = cache.get("user", sub)
        alt_score = _score(cache, sub, alt, tx_power, gamma_th, alpha, noise_power)
        alt_score = np.where(np.isnan(alt_score), -np.inf, alt_score)
        better = alt_score > score[idx]
        theta[idx[better]] = alt[better]
        score[idx[better]] = alt_score[better]
    return score, theta


def qos_phase_ascent(channels: ChannelSet, mode: ModeSelection, theta0: np.ndarray,
                     tx_power: float, gamma_th: float, noise_power: float,
                     opts: OptimizerOptions, n_candidates: int = 32):
    """Coordinate ascent of the QoS-constrained radar objective over the phases.

    For each reflecting element the candidates are a uniform phase grid, the
    current value and the phases that align the element with the radar path
    and with the user path; the best one is kept. Scores are
    ``||t_b||^2 * qos_illumination`` for feasible points and, below the QoS,
    a negative value increasing in the user's channel gain, so an infeasible
    start climbs towards feasibility first. Never decreases the score.
    Returns (theta, trace of per-sweep scores).
    """
    G = channels.G
    pu = cascaded_terms(G, channels.u_r)
    pt = cascaded_terms(G, channels.t_r)
    conn = list(mode.connected)
    u_c, t_c = channels.u_r[conn], channels.t_r[conn]
    cu2 = float(np.vdot(u_c, u_c).real)
    ct2 = float(np.vdot(t_c, t_c).real)
    cut = np.vdot(u_c, t_c)
    need = gamma_th * noise_power
    grid = np.exp(2j * np.pi * np.arange(n_candidates) / n_candidates)

    def objective(u_b, t_b):
        tb2 = np.sum(np.abs(t_b) ** 2, axis=-1)
        u2 = np.sum(np.abs(u_b) ** 2, axis=-1) + cu2
        ut2 = np.abs(np.sum(u_b.conj() * t_b, axis=-1) + cut) ** 2
        illum = qos_illumination(u2, tb2 + ct2, ut2, tx_power, gamma_th, noise_power)
        # u2 / need only matters where the QoS fails, i.e. where it is below 1
        below = np.minimum(tx_power * u2, need) / need - 2.0 if need > 0 \
            else np.full(u2.shape, -2.0)
        return np.where(np.isnan(illum), below, tb2 * illum)

    theta = np.where(mode.reflecting, theta0, 1.0 + 0j)
    masked = np.where(mode.reflecting, theta, 0.0)
    u_b = channels.u_d + masked @ pu
    t_b = channels.t_d + masked @ pt
    cur = float(objective(u_b, t_b))
    trace = [cur]
    free = np.flatnonzero(mode.reflecting)
    for _ in range(opts.max_iterations):
        start = cur
        for n in free:
            ub0 = u_b - theta[n] * pu[n]
            tb0 = t_b - theta[n] * pt[n]
            extra = [theta[n]]
            for base, term in ((tb0, pt[n]), (ub0, pu[n])):
                z = np.vdot(term, base)
                if abs(z) > 0:
                    extra.append(z / abs(z))
            cands = np.concatenate([np.asarray(extra), grid])
            ub = ub0[None, :] + cands[:, None] * pu[n][None, :]
            tb = tb0[None, :] + cands[:, None] * pt[n][None, :]
            vals = objective(ub, tb)
            k = int(np.argmax(vals))
            if vals[k] > cur:
                theta[n] = cands[k]
                u_b, t_b, cur = ub[k], tb[k], float(vals[k])
        # resynchronize to keep rounding from accumulating
        masked = np.where(mode.reflecting, theta, 0.0)
        u_b = channels.u_d + masked @ pu
        t_b = channels.t_d + masked @ pt
        cur = float(objective(u_b, t_b))
        trace.append(cur)
        if cur - start <= opts.convergence_tol * abs(start):
            break
    return theta, trace


def evaluate_isac(channels: ChannelSet, mode: ModeSelection, phases: PhaseProfile,
                  tx_power: float, gamma_th: float, alpha: complex,
                  noise_power: float) -> IsacSolution:
    """QoS beamformer and both SNRs for a fixed (mode, phases); raises InfeasibleError."""
    eff = isac_effective_channels(channels, mode, phases)
    bf = optimize_beamformer_qos(eff.u, eff.t, tx_power, gamma_th, noise_power,
                                 n_bs=eff.M, w=eff.t_b.copy())
    return IsacSolution(phases=phases, mode=mode, beamformer=bf,
                        comm_snr=comm_snr(eff.u, bf.f, noise_power),
                        radar_snr=radar_snr(eff, bf, alpha, noise_power))


def evaluate_das(channels: ChannelSet, mode: ModeSelection, tx_power: float, gamma_th: float,
                 alpha: complex, noise_power: float) -> IsacSolution:
    eff = das_effective_channels(channels, mode)
    bf = optimize_beamformer_qos(eff.u, eff.t, tx_power, gamma_th, noise_power,
                                 n_bs=eff.M, w=eff.t_b.copy())
    return IsacSolution(phases=PhaseProfile.ones(channels.N), mode=mode, beamformer=bf,
                        comm_snr=comm_snr(eff.u, bf.f, noise_power),
                        radar_snr=radar_snr(eff, bf, alpha, noise_power))


def _mode_candidates(cache, a, tx_power, gamma_th, alpha, noise_power):
    """Candidate subsets with an upper bound on the radar SNR each can reach.

    The bound ignores the QoS: MRT on ``t`` with the ``||t_b||^2``-optimal
    phases. Exhaustive search lists every subset; greedy search hill-climbs on
    the QoS-aware score of the closed-form designs and lists its final subset.
    """
    ch = cache.channels
    opts = cache.opts
    n_el = ch.N
    if uses_exhaustive(n_el, a, opts):
        subsets = list(itertools.combinations(range(n_el), a))
    else:
        subset = top_indices(np.abs(ch.t_r) ** 2, a)
        cur = float(_score_with_fallback(cache, [subset], tx_power, gamma_th, alpha,
                                         noise_power)[0][0])
        for _ in range(opts.greedy_max_swaps):
            cands = swap_neighbours(subset, n_el)
            if not cands:
                break
            score, _ = _score_with_fallback(cache, cands, tx_power, gamma_th, alpha, noise_power)
            k = int(np.argmax(score))
            if not score[k] > cur:
                break
            subset, cur = cands[k], float(score[k])
        subsets = [subset]
    theta = cache.get("radar", subsets)
    _, t2, _, tb2 = cache.stats(subsets, theta)
    bound = abs(alpha) ** 2 * tx_power * tb2 * t2 / noise_power
    return subsets, bound


def design_for_mode(channels: ChannelSet, mode: ModeSelection, theta0: np.ndarray,
                    tx_power: float, gamma_th: float, alpha: complex, noise_power: float,
                    opts: OptimizerOptions) -> IsacSolution:
    """Refine the phases for a fixed mode, then build the QoS beamformer."""
    theta, trace = qos_phase_ascent(channels, mode, theta0, tx_power, gamma_th, noise_power, opts)
    sol = evaluate_isac(channels, mode, PhaseProfile(theta), tx_power, gamma_th, alpha, noise_power)
    scale = abs(alpha) ** 2 / noise_power
    sol.radar_trace = [scale * v for v in trace if v >= 0]
    return sol


def solve_p2(channels: ChannelSet, a: int, tx_power: float, gamma_th: float, alpha: complex,
             noise_power: float, opts: OptimizerOptions = OptimizerOptions(),
             cache: Optional[_SubsetPhases] = None) -> IsacSolution:
    """Maximize the radar SNR subject to the user QoS.

    Every candidate mode gets an upper bound (QoS ignored, radar-optimal
    phases, MRT). Modes are refined in decreasing bound order: phases start
    from the radar- or user-oriented closed-form design and are improved by
    coordinate ascent on the radar SNR reached with the optimal QoS
    beamformer (w = t_b). The search stops once the best refined value
    reaches the next bound, or after REFINE_TOP refinements. Pass the same
    ``cache`` across calls on one realization to reuse phase designs (e.g.
    over a power sweep).
    """
    if not 0 <= a <= channels.N:
        raise ConfigError(f"a={a} must lie in [0, {channels.N}]")
    cache = cache or make_phase_cache(channels, opts)
    subsets, bound = _mode_candidates(cache, a, tx_power, gamma_th, alpha, noise_power)
    best, last_error, tried = None, None, 0
    for k in np.argsort(-bound, kind="stable"):
        if best is not None and (bound[k] <= best.radar_snr or tried >= REFINE_TOP):
            break
        if tried >= INFEASIBLE_TRIES:
            break
        tried += 1
        try:
            sol = solve_fixed_mode(channels, ModeSelection(channels.N, subsets[k]), tx_power,
                                   gamma_th, alpha, noise_power, opts, cache)
        except InfeasibleError as exc:
            last_error = exc
            continue
        if best is None or sol.radar_snr > best.radar_snr:
            best = sol
    if best is None:
        raise InfeasibleError(f"QoS {gamma_th:.6g} not met by any of the {tried} most "
                              "promising modes") from last_error
    return best


def _radar_design_inactive(cache, subset, tx_power, gamma_th, noise_power) -> bool:
    theta = cache.get("radar", [subset])
    u2 = cache.stats([subset], theta)[0][0]
    return bool(tx_power * u2 >= gamma_th * noise_power
                and not _qos_active(cache, [subset], theta, tx_power, gamma_th, noise_power)[0])


def _best_refined(channels, candidates, tx_power, gamma_th, alpha, noise_power, opts):
    best, last_error = None, None
    for subset, theta in candidates:
        try:
            sol = design_for_mode(channels, ModeSelection(channels.N, subset), theta,
                                  tx_power, gamma_th, alpha, noise_power, opts)
        except InfeasibleError as exc:
            last_error = exc
            continue
        if best is None or sol.radar_snr > best.radar_snr:
            best = sol
    if best is None:
        raise InfeasibleError(f"QoS {gamma_th:.6g} infeasible for every candidate mode") \
            from last_error
    return best


def solve_fixed_mode(channels: ChannelSet, mode: ModeSelection, tx_power: float,
                     gamma_th: float, alpha: complex, noise_power: float,
                     opts: OptimizerOptions = OptimizerOptions(),
                     cache: Optional[_SubsetPhases] = None) -> IsacSolution:
    """Phase and beamformer design of :func:`solve_p2` for a given mode."""
    cache = cache or make_phase_cache(channels, opts)
    subset = mode.connected
    kinds = ("radar",) if _radar_design_inactive(cache, subset, tx_power, gamma_th,
                                                  noise_power) else ("radar", "user")
    candidates = [(subset, cache.get(kind, [subset])[0]) for kind in kinds]
    return _best_refined(channels, candidates, tx_power, gamma_th, alpha, noise_power, opts)


def make_phase_cache(channels: ChannelSet, opts: OptimizerOptions) -> _SubsetPhases:
    if not channels.is_isac:
        raise ConfigError("ISAC channels (u_d, u_r, t_d, t_r) are missing")
    return _SubsetPhases(channels, opts)
