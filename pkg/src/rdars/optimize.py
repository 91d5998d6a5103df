"""Joint phase-shift and mode-selection optimization of the uplink MRC SNR.

Phases are optimized by cyclic coordinate ascent: with every other element
fixed, the objective ``||c + g_n theta_n||^2`` is maximized in closed form by
rotating ``theta_n`` onto ``g_n^H c``. Many (mode, start) configurations are
optimized together as one batch so exhaustive mode search stays vectorized.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from rdars.channel import ChannelSet
from rdars.core import (
    GainDecomposition,
    ModeSelection,
    PhaseProfile,
    cascaded_terms,
    effective_uplink_channel,
    gain_decomposition,
    uplink_snr,
)
from rdars.errors import ConfigError, SearchCapError

MODE_SEARCHES = ("exhaustive", "greedy_swap")

# rows of (mode, start) pairs handled per vectorized coordinate-ascent call
BATCH_ROWS = 4096


@dataclass(frozen=True)
class OptimizerOptions:
    max_iterations: int = 100
    convergence_tol: float = 1e-8
    n_random_starts: int = 3
    mode_search: str = "exhaustive"
    greedy_max_swaps: int = 50
    exhaustive_cap: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")
        if not self.convergence_tol > 0:
            raise ConfigError("convergence_tol must be > 0")
        if self.n_random_starts < 1:
            raise ConfigError("n_random_starts must be >= 1")
        if self.mode_search not in MODE_SEARCHES:
            raise ConfigError(f"mode_search must be one of {MODE_SEARCHES}, got {self.mode_search!r}")
        if self.greedy_max_swaps < 0:
            raise ConfigError("greedy_max_swaps must be >= 0")


@dataclass(eq=False)
class UplinkSolution:
    phases: PhaseProfile
    mode: ModeSelection
    snr: float
    objective_trace: List[float] = field(default_factory=list)
    decomposition: Optional[GainDecomposition] = None

    @property
    def objective(self) -> float:
        return self.objective_trace[-1]


# -- batched coordinate ascent ------------------------------------------------

def coordinate_ascent(base: np.ndarray, terms: np.ndarray, theta0: np.ndarray,
                      reflecting: np.ndarray, max_iterations: int, tol: float):
    """Maximize ``||base + sum_n reflecting[n] * theta[n] * terms[n]||^2`` row by row.

    Parameters
    ----------
    base : (M,) complex
    terms : (N, M) complex, per-element contributions
    theta0 : (B, N) unit-modulus starting points
    reflecting : (B, N) bool, which entries are free
    max_iterations : number of full sweeps allowed
    tol : stop once every row's relative improvement over a sweep is below this

    Returns
    -------
    theta : (B, N)
    objective : (B,)
    trace : (n_sweeps + 1, B) objective after each sweep, starting with the initial value
    """
    theta = np.array(theta0, dtype=complex, copy=True)
    reflecting = np.asarray(reflecting, dtype=bool)
    n_rows, n_el = theta.shape
    norms2 = np.einsum("nm,nm->n", terms.conj(), terms).real

    def total(th, refl):
        return base + np.where(refl, th, 0.0) @ terms

    s = total(theta, reflecting)
    obj = np.einsum("bm,bm->b", s.conj(), s).real
    trace = [obj.copy()]
    live = np.arange(n_rows)    # rows still improving
    for _ in range(max_iterations):
        th = theta[live]
        refl = reflecting[live]
        s_live = s[live]
        for n in range(n_el):
            free = refl[:, n]
            if not free.any():
                continue
            g = terms[n]
            old = th[:, n]
            z = s_live @ g.conj() - np.where(free, old, 0.0) * norms2[n]
            mag = np.abs(z)
            new = np.where(free & (mag > 0), z / np.where(mag > 0, mag, 1.0), old)
            s_live += np.where(free, new - old, 0.0)[:, None] * g
            th[:, n] = new
        theta[live] = th
        # resynchronize to keep rounding from accumulating across sweeps
        s_live = total(th, refl)
        s[live] = s_live
        new_obj = np.einsum("bm,bm->b", s_live.conj(), s_live).real
        gain = new_obj - obj[live]
        obj[live] = new_obj
        trace.append(obj.copy())
        done = gain <= tol * np.maximum(np.abs(new_obj), np.finfo(float).tiny)
        live = live[~done]
        if live.size == 0:
            break
    return theta, obj, np.array(trace)


def aligned_start(base: np.ndarray, terms: np.ndarray) -> np.ndarray:
    """Rotate each element's contribution onto the first entry of the direct channel."""
    ref = np.angle(base[0]) if base.size else 0.0
    return np.exp(1j * (ref - np.angle(terms[:, 0])))


def start_points(base: np.ndarray, terms: np.ndarray, opts: OptimizerOptions) -> np.ndarray:
    """(n_random_starts, N): the aligned warm start followed by seeded uniform draws."""
    n_el = terms.shape[0]
    rng = np.random.default_rng(opts.seed)
    rand = np.exp(1j * rng.uniform(0.0, 2 * np.pi, (opts.n_random_starts - 1, n_el)))
    return np.vstack([aligned_start(base, terms)[None, :], rand])


def refined_starts(base: np.ndarray, terms: np.ndarray, opts: OptimizerOptions) -> np.ndarray:
    """Start points after coordinate ascent with every element reflecting.

    Masking a few elements of a converged full-surface profile leaves it close
    to the masked optimum, so per-mode ascent from these needs few sweeps.
    """
    starts = start_points(base, terms, opts)
    theta, _, _ = coordinate_ascent(base, terms, starts, np.ones(starts.shape, dtype=bool),
                                    opts.max_iterations, opts.convergence_tol)
    return theta


def _best_over_modes(base, terms, extra, subsets, starts, opts):
    """Optimize phases for every subset from every start; keep the best start per subset.

    ``extra`` is the per-element power added for connected elements. Returns
    (theta (S, N), objective (S,), traces list).
    """
    n_el = terms.shape[0]
    starts = np.atleast_2d(starts)
    n_starts = starts.shape[0]
    out_theta = np.empty((len(subsets), n_el), dtype=complex)
    out_obj = np.empty(len(subsets))
    out_trace: List[np.ndarray] = [None] * len(subsets)
    per_chunk = max(1, BATCH_ROWS // n_starts)
    for lo in range(0, len(subsets), per_chunk):
        chunk = subsets[lo:lo + per_chunk]
        refl = np.ones((len(chunk), n_el), dtype=bool)
        for k, sub in enumerate(chunk):
            refl[k, list(sub)] = False
        refl_rows = np.repeat(refl, n_starts, axis=0)
        theta0 = np.tile(starts, (len(chunk), 1))
        theta, obj, trace = coordinate_ascent(base, terms, theta0, refl_rows,
                                              opts.max_iterations, opts.convergence_tol)
        conn_power = (~refl).astype(float) @ extra
        obj = obj + np.repeat(conn_power, n_starts)
        obj = obj.reshape(len(chunk), n_starts)
        pick = np.argmax(obj, axis=1)
        rows = np.arange(len(chunk)) * n_starts + pick
        out_theta[lo:lo + len(chunk)] = theta[rows]
        out_obj[lo:lo + len(chunk)] = obj[np.arange(len(chunk)), pick]
        for k, r in enumerate(rows):
            out_trace[lo + k] = trace[:, r] + conn_power[k]
    return out_theta, out_obj, out_trace


def _uplink_problem(channels: ChannelSet):
    if channels.h_d is None:
        raise ConfigError("uplink channels (h_d, h_r) are missing")
    terms = cascaded_terms(channels.G, channels.h_r)
    return channels.h_d, terms, np.abs(channels.h_r) ** 2


def _trim_trace(trace: np.ndarray) -> List[float]:
    return [float(x) for x in trace]


# -- public operations --------------------------------------------------------

def optimize_phases(channels: ChannelSet, mode: ModeSelection, init: PhaseProfile,
                    opts: OptimizerOptions = OptimizerOptions()) -> PhaseProfile:
    """Coordinate ascent from a single starting point; connected entries stay as given."""
    base, terms, _ = _uplink_problem(channels)
    theta, _, _ = coordinate_ascent(base, terms, init.theta[None, :], mode.reflecting[None, :],
                                    opts.max_iterations, opts.convergence_tol)
    return PhaseProfile(theta[0])


def _solution(channels, theta, subset, trace, tx_power, noise_power) -> UplinkSolution:
    n_el = channels.N
    mode = ModeSelection(n_el, tuple(subset))
    phases = PhaseProfile(theta)
    snr = uplink_snr(effective_uplink_channel(channels, mode, phases), tx_power, noise_power)
    return UplinkSolution(phases=phases, mode=mode, snr=snr, objective_trace=_trim_trace(trace))


def select_modes_exhaustive(channels: ChannelSet, a: int,
                            opts: OptimizerOptions = OptimizerOptions(),
                            tx_power: float = 1.0, noise_power: float = 1.0) -> UplinkSolution:
    """Try every size-``a`` connection set; ties go to the lexicographically smallest set."""
    n_el = channels.N
    if not 0 <= a <= n_el:
        raise ConfigError(f"a={a} must lie in [0, {n_el}]")
    count = math.comb(n_el, a)
    if count > opts.exhaustive_cap:
        raise SearchCapError(
            f"C({n_el}, {a}) = {count} subsets exceeds exhaustive_cap={opts.exhaustive_cap}")
    base, terms, extra = _uplink_problem(channels)
    subsets = list(itertools.combinations(range(n_el), a))
    theta, obj, traces = _best_over_modes(base, terms, extra, subsets,
                                          refined_starts(base, terms, opts), opts)
    best = int(np.argmax(obj))
    return _solution(channels, theta[best], subsets[best], traces[best], tx_power, noise_power)


def top_indices(power: np.ndarray, a: int) -> Tuple[int, ...]:
    """Indices of the ``a`` largest entries; equal values resolve to lower indices."""
    order = np.argsort(-power, kind="stable")
    return tuple(sorted(int(i) for i in order[:a]))


def swap_neighbours(subset: Sequence[int], n_total: int) -> List[Tuple[int, ...]]:
    """All sets reachable by exchanging one member for one non-member, sorted."""
    inside = set(subset)
    outside = [j for j in range(n_total) if j not in inside]
    return sorted({tuple(sorted(inside - {i} | {j})) for i in inside for j in outside})


def greedy_swap_search(base, terms, extra, init_subset, opts):
    """Hill-climb over single in/out swaps starting from ``init_subset``.

    Each swap candidate is re-optimized starting from the incumbent phases.
    Returns (subset, theta, objective, trace).
    """
    n_el = terms.shape[0]
    starts = refined_starts(base, terms, opts)
    subset = tuple(init_subset)
    theta, obj, traces = _best_over_modes(base, terms, extra, [subset], starts, opts)
    cur_theta, cur_score = theta[0], float(obj[0])
    trace = list(traces[0])
    for _ in range(opts.greedy_max_swaps):
        cands = swap_neighbours(subset, n_el)
        if not cands:
            break
        theta, obj, _ = _best_over_modes(base, terms, extra, cands, cur_theta, opts)
        k = int(np.argmax(obj))
        if not obj[k] > cur_score:
            break
        subset, cur_theta, cur_score = cands[k], theta[k], float(obj[k])
        trace.append(cur_score)
    return subset, cur_theta, cur_score, trace


def select_modes_greedy(channels: ChannelSet, a: int,
                        opts: OptimizerOptions = OptimizerOptions(),
                        tx_power: float = 1.0, noise_power: float = 1.0) -> UplinkSolution:
    """Start from the ``a`` strongest user-to-element links, then accept improving swaps."""
    n_el = channels.N
    if not 0 <= a <= n_el:
        raise ConfigError(f"a={a} must lie in [0, {n_el}]")
    base, terms, extra = _uplink_problem(channels)
    subset, theta, _, trace = greedy_swap_search(base, terms, extra, top_indices(extra, a), opts)
    return _solution(channels, theta, subset, np.asarray(trace), tx_power, noise_power)


def uses_exhaustive(n_total: int, a: int, opts: OptimizerOptions) -> bool:
    return opts.mode_search == "exhaustive" and math.comb(n_total, a) <= opts.exhaustive_cap


def solve_p1(channels: ChannelSet, a: int, opts: OptimizerOptions = OptimizerOptions(),
             tx_power: float = 1.0, noise_power: float = 1.0) -> UplinkSolution:
    """Maximize the uplink MRC SNR over phases and a size-``a`` connection set.

    Exhaustive mode search is used when requested and C(N, a) is within the
    cap; otherwise the greedy swap search. The returned solution carries the
    gain decomposition against the default assignment (first ``a`` elements).
    """
    if uses_exhaustive(channels.N, a, opts):
        sol = select_modes_exhaustive(channels, a, opts, tx_power, noise_power)
    else:
        sol = select_modes_greedy(channels, a, opts, tx_power, noise_power)
    sol.decomposition = gain_decomposition(channels, sol.phases, sol.mode,
                                           ModeSelection.default(channels.N, a),
                                           tx_power, noise_power)
    return sol


def random_mode(n_total: int, a: int, rng: np.random.Generator) -> ModeSelection:
    return ModeSelection.from_indices(n_total, rng.choice(n_total, size=a, replace=False))


def best_phases_for_mode(channels: ChannelSet, mode: ModeSelection,
                         opts: OptimizerOptions = OptimizerOptions()) -> Tuple[PhaseProfile, float]:
    """Multi-start phase optimization for a fixed mode; returns (phases, objective)."""
    base, terms, extra = _uplink_problem(channels)
    theta, obj, _ = _best_over_modes(base, terms, extra, [mode.connected],
                                     refined_starts(base, terms, opts), opts)
    return PhaseProfile(theta[0]), float(obj[0])
