"""Brute-force reference solvers for small instances.

These enumerate discretized search spaces directly and share no code with
the optimizers they are used to check, apart from the channel containers.
"""

from __future__ import annotations

import itertools
import math
from typing import Callable, Optional, Tuple

import numpy as np

from rdars.channel import ChannelSet
from rdars.core import ModeSelection, PhaseProfile
from rdars.errors import InfeasibleError, SearchCapError
from rdars.isac import IsacBeamformer

PHASE_GRID_BITS_CAP = 24
MODE_SUBSETS_CAP = 10_000
_CHUNK = 1 << 18


def _uplink_objective_parts(channels: ChannelSet, mode: ModeSelection):
    G, h_d, h_r = channels.G, channels.h_d, channels.h_r
    free = [n for n in range(channels.N) if n not in mode.connected]
    # column n of G^H scaled by h_r[n]: the n-th reflected path
    paths = np.stack([G.conj().T[:, n] * h_r[n] for n in free], axis=0) if free else \
        np.zeros((0, channels.M), dtype=complex)
    connected_power = sum(abs(h_r[n]) ** 2 for n in mode.connected)
    return free, paths, h_d, connected_power


def _half_sums(paths, levels, alphabet):
    """All sums ``sum_k alphabet[d_k] paths[k]`` over digit strings in lexicographic order."""
    n = paths.shape[0]
    out = np.zeros((1, paths.shape[1]), dtype=complex)
    for k in range(n):
        out = (out[:, None, :] + alphabet[None, :, None] * paths[k][None, None, :]).reshape(
            -1, paths.shape[1])
    return out


def brute_phase_grid(channels: ChannelSet, mode: ModeSelection,
                     levels: int = 16) -> Tuple[PhaseProfile, float]:
    """Best phase profile on the ``levels``-point grid for a fixed mode.

    The objective is the full uplink gain ``||h_b||^2 + ||h_c||^2``. The grid
    is split into two halves whose partial sums ``v1``, ``v2`` are enumerated
    separately, and ``||v1 + v2||^2`` is evaluated for every pair, so the search
    is still exhaustive. Pairs are visited in lexicographic order of the grid
    indices and ties resolve to the earliest profile.
    """
    free, paths, h_d, conn = _uplink_objective_parts(channels, mode)
    bits = len(free) * math.log2(levels) if levels > 1 else 0.0
    if bits > PHASE_GRID_BITS_CAP:
        raise SearchCapError(
            f"phase grid of {levels}^{len(free)} points exceeds 2^{PHASE_GRID_BITS_CAP}")
    alphabet = np.exp(2j * np.pi * np.arange(levels) / levels)
    n_first = len(free) // 2
    v1 = h_d[None, :] + _half_sums(paths[:n_first], levels, alphabet)
    v2 = _half_sums(paths[n_first:], levels, alphabet)
    p1 = np.sum(np.abs(v1) ** 2, axis=1)
    p2 = np.sum(np.abs(v2) ** 2, axis=1)
    rows = max(1, _CHUNK // v2.shape[0])
    best_val, best_idx = -np.inf, (0, 0)
    for lo in range(0, v1.shape[0], rows):
        blk = slice(lo, lo + rows)
        obj = p1[blk, None] + p2[None, :] + 2 * (v1[blk].conj() @ v2.T).real
        k = int(np.argmax(obj))
        if obj.flat[k] > best_val:
            i, j = np.unravel_index(k, obj.shape)
            best_val, best_idx = float(obj.flat[k]), (lo + i, j)
    flat = best_idx[0] * v2.shape[0] + best_idx[1]
    theta = np.ones(channels.N, dtype=complex)
    for k in range(len(free) - 1, -1, -1):
        theta[free[k]] = alphabet[flat % levels]
        flat //= levels
    return PhaseProfile(theta), best_val + conn


def quantization_bound(channels: ChannelSet, mode: ModeSelection, levels: int = 16) -> float:
    """Upper bound on how much rounding the continuous optimum to the grid can lose.

    Rounding moves each phase by at most pi/levels, hence each reflected path
    by at most ``|e^{j pi/L} - 1| * ||g_n||``; with ``S`` the largest possible
    amplitude ``||h_d|| + sum ||g_n||`` the objective moves by at most
    ``2 S^2 |e^{j pi/L} - 1|``.
    """
    _, paths, h_d, _ = _uplink_objective_parts(channels, mode)
    amp = float(np.linalg.norm(h_d) + np.sum(np.linalg.norm(paths, axis=1)))
    step = abs(np.exp(1j * np.pi / levels) - 1)
    return 2 * amp ** 2 * step


def brute_mode_search(channels: ChannelSet, a: int,
                      phase_oracle: Optional[Callable] = None
                      ) -> Tuple[ModeSelection, PhaseProfile, float]:
    """Enumerate every size-``a`` connection set with the phase oracle for each one."""
    phase_oracle = phase_oracle or brute_phase_grid
    n_el = channels.N
    count = math.comb(n_el, a)
    if count > MODE_SUBSETS_CAP:
        raise SearchCapError(f"C({n_el}, {a}) = {count} exceeds the oracle cap {MODE_SUBSETS_CAP}")
    best = None
    for subset in itertools.combinations(range(n_el), a):
        mode = ModeSelection(n_el, subset)
        phases, obj = phase_oracle(channels, mode)
        if best is None or obj > best[2]:
            best = (mode, phases, obj)
    return best


def brute_beamformer_grid(u: np.ndarray, t: np.ndarray, tx_power: float, gamma_th: float,
                          noise_power: float, grid: Tuple[int, int] = (2000, 2000),
                          n_bs: Optional[int] = None) -> Tuple[IsacBeamformer, float]:
    """Grid search over ``f = sqrt(p)(cos b e^{j phi} e1 + sin b e2)`` in span{u, t}.

    ``b`` covers [0, pi/2] and ``phi`` covers [0, 2 pi). Returns the best feasible
    point and its ``|t^H f|^2``; raises InfeasibleError when no grid point
    meets the QoS.
    """
    n_beta, n_phi = grid
    if n_beta < 100 or n_phi < 100:
        raise ValueError("grid sizes must be at least 100 each")
    u = np.asarray(u, dtype=complex)
    t = np.asarray(t, dtype=complex)
    n_bs = u.shape[0] if n_bs is None else n_bs
    # Gram-Schmidt by projection, written independently of the solver
    e1 = u / np.sqrt(np.sum(np.abs(u) ** 2))
    r = t - np.sum(e1.conj() * t) * e1
    r_norm = np.sqrt(np.sum(np.abs(r) ** 2))
    if r_norm <= 1e-12 * np.sqrt(np.sum(np.abs(t) ** 2)):
        # any unit vector orthogonal to e1 will do
        probe = np.zeros_like(u)
        probe[int(np.argmin(np.abs(e1)))] = 1.0
        r = probe - np.sum(e1.conj() * probe) * e1
        r_norm = np.sqrt(np.sum(np.abs(r) ** 2))
    e2 = r / r_norm
    u1, u2 = np.sum(u.conj() * e1), np.sum(u.conj() * e2)
    t1, t2 = np.sum(t.conj() * e1), np.sum(t.conj() * e2)
    beta = np.linspace(0.0, np.pi / 2, n_beta)
    phase = np.exp(1j * np.arange(n_phi) * 2 * np.pi / n_phi)
    sp = math.sqrt(tx_power)
    best_val, best_ij = -np.inf, None
    for lo in range(0, n_beta, 200):
        b = beta[lo:lo + 200, None]
        c = np.cos(b) * phase[None, :]
        s = np.sin(b)
        comm = np.abs(sp * (u1 * c + u2 * s)) ** 2 / noise_power
        obj = np.abs(sp * (t1 * c + t2 * s)) ** 2
        obj = np.where(comm >= gamma_th, obj, -np.inf)
        k = int(np.argmax(obj))
        if obj.flat[k] > best_val:
            best_val = float(obj.flat[k])
            i, j = np.unravel_index(k, obj.shape)
            best_ij = (lo + i, j)
    if best_ij is None:
        raise InfeasibleError("no grid point satisfies the QoS constraint")
    i, j = best_ij
    f = sp * (np.cos(beta[i]) * phase[j] * e1 + np.sin(beta[i]) * e2)
    bf = IsacBeamformer(f_b=f[:n_bs], f_r=f[n_bs:], w=t[:n_bs].copy())
    return bf, best_val


def _grid_beamformer_value(u2, t2, ut_abs, tx_power, gamma_th, noise_power, n_beta):
    """Best ``|t^H f|^2`` over the beta grid of :func:`brute_beamformer_grid`, per row.

    With ``phi`` phase-aligned the objective along beta is ``R^2 cos^2(beta - beta*)``,
    unimodal on [0, pi/2], so the best feasible grid point is one of the two
    neighbours of ``min(beta*, beta_max)``. Infeasible rows give -inf.
    """
    u_norm = np.sqrt(u2)
    tau1 = ut_abs / u_norm
    tau2 = np.sqrt(np.maximum(t2 - tau1 ** 2, 0.0))
    c0 = np.sqrt(gamma_th * noise_power / (tx_power * u2))
    beta_max = np.arccos(np.minimum(c0, 1.0))
    step = (np.pi / 2) / (n_beta - 1)
    k_max = np.floor(beta_max / step + 1e-12)
    peak = np.minimum(np.arctan2(tau2, tau1), beta_max)
    best = np.full(u2.shape, -np.inf)
    for k in (np.floor(peak / step), np.floor(peak / step) + 1):
        k = np.minimum(k, k_max)
        b = k * step
        val = tx_power * (tau1 * np.cos(b) + tau2 * np.sin(b)) ** 2
        best = np.maximum(best, val)
    return np.where(c0 <= 1.0, best, -np.inf)


def brute_isac_search(channels: ChannelSet, a: int, alpha: complex, tx_power: float,
                      gamma_th: float, noise_power: float, levels: int = 16,
                      n_beta: int = 2000) -> Tuple[ModeSelection, PhaseProfile, float]:
    """Joint discretized optimum of the radar SNR under the user QoS.

    Enumerates every size-``a`` mode, every ``levels``-point phase profile of the
    reflecting elements and the beta grid of the beamformer oracle, with the
    receive filter matched to ``t_b``. Raises InfeasibleError when nothing meets the QoS.
    """
    n_el = channels.N
    if math.comb(n_el, a) > MODE_SUBSETS_CAP:
        raise SearchCapError(f"C({n_el}, {a}) exceeds the oracle cap {MODE_SUBSETS_CAP}")
    if (n_el - a) * math.log2(max(levels, 1)) > PHASE_GRID_BITS_CAP:
        raise SearchCapError(f"phase grid of {levels}^{n_el - a} points exceeds the cap")
    alphabet = np.exp(2j * np.pi * np.arange(levels) / levels)
    Gh = channels.G.conj().T
    best = (-np.inf, None, None)
    for subset in itertools.combinations(range(n_el), a):
        free = [n for n in range(n_el) if n not in subset]
        pu = np.array([Gh[:, n] * channels.u_r[n] for n in free]).reshape(-1, channels.M)
        pt = np.array([Gh[:, n] * channels.t_r[n] for n in free]).reshape(-1, channels.M)
        u_c = channels.u_r[list(subset)]
        t_c = channels.t_r[list(subset)]
        # split the reflecting elements in two halves and combine partial sums pairwise
        h = len(free) // 2
        u1 = channels.u_d[None, :] + _half_sums(pu[:h], levels, alphabet)
        t1 = channels.t_d[None, :] + _half_sums(pt[:h], levels, alphabet)
        u2_, t2_ = _half_sums(pu[h:], levels, alphabet), _half_sums(pt[h:], levels, alphabet)
        nu1, nt1 = np.sum(np.abs(u1) ** 2, 1), np.sum(np.abs(t1) ** 2, 1)
        nu2, nt2 = np.sum(np.abs(u2_) ** 2, 1), np.sum(np.abs(t2_) ** 2, 1)
        ut_self2 = np.sum(u2_.conj() * t2_, 1)
        ut_self1 = np.sum(u1.conj() * t1, 1) + np.vdot(u_c, t_c)
        rows = max(1, _CHUNK // u2_.shape[0])
        for lo in range(0, u1.shape[0], rows):
            blk = slice(lo, lo + rows)
            tb2 = nt1[blk, None] + nt2[None, :] + 2 * (t1[blk].conj() @ t2_.T).real
            uu = (nu1[blk, None] + nu2[None, :] + 2 * (u1[blk].conj() @ u2_.T).real
                  + np.sum(np.abs(u_c) ** 2))
            ut = np.abs(ut_self1[blk, None] + ut_self2[None, :]
                        + u1[blk].conj() @ t2_.T + (t1[blk].conj() @ u2_.T).conj())
            tt = tb2 + np.sum(np.abs(t_c) ** 2)
            illum = _grid_beamformer_value(uu, tt, ut, tx_power, gamma_th, noise_power, n_beta)
            radar = abs(alpha) ** 2 * tb2 * illum / noise_power
            k = int(np.argmax(radar))
            if radar.flat[k] > best[0]:
                i, j = np.unravel_index(k, radar.shape)
                flat = (lo + i) * u2_.shape[0] + j
                theta = np.ones(n_el, dtype=complex)
                for m in range(len(free) - 1, -1, -1):
                    theta[free[m]] = alphabet[flat % levels]
                    flat //= levels
                best = (float(radar.flat[k]), subset, theta)
    if best[1] is None:
        raise InfeasibleError("no discretized configuration satisfies the QoS constraint")
    return ModeSelection(n_el, best[1]), PhaseProfile(best[2]), best[0]
