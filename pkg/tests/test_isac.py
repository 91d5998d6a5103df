import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import cn, gaussian_isac, gaussian_uplink, rel_err
from rdars.channel import ChannelSet
from rdars.core import ModeSelection, PhaseProfile
from rdars.errors import ConfigError, DegenerateChannelError, InfeasibleError
from rdars.isac import (IsacBeamformer, IsacEffectiveChannels, comm_snr, evaluate_isac,
                        isac_effective_channels, optimize_beamformer_qos, qos_illumination,
                        radar_snr, radar_snr_mrc_mrt, radar_snr_mrc_mrt_expanded,
                        solve_fixed_mode, solve_p2)
from rdars.optimize import best_phases_for_mode
from rdars.oracles import brute_beamformer_grid, brute_isac_search


def mrt(t, p):
    return math.sqrt(p) * t / np.linalg.norm(t)


def random_eff(rng, M, a):
    return IsacEffectiveChannels(u=cn(rng, M + a), t_b=cn(rng, M), t_c=cn(rng, a))


# -- effective channels ----------------------------------------------------------

def test_effective_channels_passive(rng):
    ch = gaussian_isac(rng, 2, 5)
    phases = PhaseProfile.random(5, rng)
    eff = isac_effective_channels(ch, ModeSelection(5), phases)
    expected = ch.u_d + ch.G.conj().T @ np.diag(phases.theta) @ ch.u_r
    np.testing.assert_allclose(eff.u, expected, rtol=1e-13)
    assert eff.t_c.size == 0


def test_effective_channels_all_connected(rng):
    ch = gaussian_isac(rng, 2, 4)
    eff = isac_effective_channels(ch, ModeSelection.default(4, 4), PhaseProfile.random(4, rng))
    np.testing.assert_array_equal(eff.u, np.concatenate([ch.u_d, ch.u_r]))
    np.testing.assert_array_equal(eff.t_b, ch.t_d)


def test_effective_channels_dense_oracle(rng):
    ch = gaussian_isac(rng, 3, 6)
    mode = ModeSelection(6, (2, 5))
    phases = PhaseProfile.random(6, rng)
    eff = isac_effective_channels(ch, mode, phases)
    mask = np.eye(6) - mode.matrix()
    Phi = np.diag(phases.theta)
    u = np.concatenate([ch.u_d + ch.G.conj().T @ mask @ Phi @ ch.u_r,
                        mode.selection_matrix() @ ch.u_r])
    t_b = ch.t_d + ch.G.conj().T @ mask @ Phi @ ch.t_r
    np.testing.assert_allclose(eff.u, u, rtol=1e-13)
    np.testing.assert_allclose(eff.t_b, t_b, rtol=1e-13)
    np.testing.assert_array_equal(eff.t, np.concatenate([eff.t_b, eff.t_c]))


def test_effective_channels_need_isac(rng):
    with pytest.raises(ConfigError):
        isac_effective_channels(gaussian_uplink(rng, 2, 3), ModeSelection(3), PhaseProfile.ones(3))


# -- SNR expressions ---------------------------------------------------------------

def test_comm_snr_cases(rng):
    u = np.array([1.0, 0.0], complex)
    assert comm_snr(u, np.array([0.0, 2.0], complex), 1.0) == 0.0
    u = cn(rng, 4)
    assert rel_err(comm_snr(u, mrt(u, 2.5), 0.4), 2.5 * np.vdot(u, u).real / 0.4) < 1e-12
    f = cn(rng, 4)
    assert rel_err(comm_snr(u, f, 0.4), abs(np.sum(u.conj() * f)) ** 2 / 0.4) < 1e-12
    with pytest.raises(ConfigError):
        comm_snr(u, f, 0.0)


def test_radar_snr_zero_alpha(rng):
    eff = random_eff(rng, 2, 1)
    bf = IsacBeamformer(f_b=cn(rng, 2), f_r=cn(rng, 1), w=cn(rng, 2))
    assert radar_snr(eff, bf, 0.0, 1.0) == 0.0


def test_radar_snr_zero_filter(rng):
    eff = random_eff(rng, 2, 1)
    bf = IsacBeamformer(f_b=cn(rng, 2), f_r=cn(rng, 1), w=np.zeros(2, complex))
    with pytest.raises(DegenerateChannelError):
        radar_snr(eff, bf, 1.0, 1.0)


def test_radar_snr_filter_scale_invariance(rng):
    eff = random_eff(rng, 3, 2)
    bf = IsacBeamformer(f_b=cn(rng, 3), f_r=cn(rng, 2), w=cn(rng, 3))
    scaled = IsacBeamformer(f_b=bf.f_b, f_r=bf.f_r, w=5j * bf.w)
    assert rel_err(radar_snr(eff, scaled, 0.3, 0.2), radar_snr(eff, bf, 0.3, 0.2)) < 1e-12


@settings(max_examples=200)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 6), st.integers(0, 5),
       st.floats(1e-3, 1e3), st.complex_numbers(min_magnitude=1e-2, max_magnitude=10),
       st.floats(1e-3, 1e3))
def test_radar_closed_form_identity(seed, M, a, p, alpha, s2):
    rng = np.random.default_rng(seed)
    eff = random_eff(rng, M, a)
    f = mrt(eff.t, p)
    bf = IsacBeamformer(f_b=f[:M], f_r=f[M:], w=eff.t_b.copy())
    assert rel_err(radar_snr(eff, bf, alpha, s2), radar_snr_mrc_mrt(eff, p, alpha, s2)) < 1e-12


def test_radar_mrc_mrt_arithmetic():
    eff = IsacEffectiveChannels(u=np.zeros(4, complex), t_b=np.array([1.0 + 0j]),
                                t_c=np.array([1.0, 1.0, 1.0], complex))
    assert radar_snr_mrc_mrt(eff, 1.0, 1.0, 1.0) == pytest.approx(4.0, rel=1e-15)


def test_radar_mrc_mrt_passive(rng):
    t_b = cn(rng, 3)
    eff = IsacEffectiveChannels(u=cn(rng, 3), t_b=t_b, t_c=np.zeros(0, complex))
    expected = 2.0 / 0.5 * 0.09 * np.vdot(t_b, t_b).real ** 2
    assert rel_err(radar_snr_mrc_mrt(eff, 2.0, 0.3, 0.5), expected) < 1e-12


def test_radar_mrc_mrt_degenerate():
    eff = IsacEffectiveChannels(u=np.ones(2, complex), t_b=np.zeros(2, complex),
                                t_c=np.zeros(0, complex))
    with pytest.raises(DegenerateChannelError):
        radar_snr_mrc_mrt(eff, 1.0, 1.0, 1.0)


def test_radar_expanded_form(rng):
    ch = gaussian_isac(rng, 3, 8)
    mode = ModeSelection(8, (1, 6))
    eff = isac_effective_channels(ch, mode, PhaseProfile.random(8, rng))
    a = radar_snr_mrc_mrt(eff, 1.7, 0.4 - 0.2j, 0.3)
    b = radar_snr_mrc_mrt_expanded(eff.t_b, ch.t_r, mode, 1.7, 0.4 - 0.2j, 0.3)
    assert rel_err(a, b) < 1e-12


def test_connection_elements_do_not_receive(rng):
    eff = random_eff(rng, 2, 2)
    bf = IsacBeamformer(f_b=cn(rng, 2), f_r=cn(rng, 2), w=cn(rng, 2))
    other = IsacEffectiveChannels(u=eff.u, t_b=eff.t_b, t_c=cn(rng, 2))

    def echo(e):
        return abs(np.vdot(bf.w, e.t_b)) ** 2 / np.vdot(bf.w, bf.w).real

    def illum(e):
        return abs(np.vdot(e.t, bf.f)) ** 2

    assert echo(eff) == echo(other)
    assert rel_err(radar_snr(other, bf, 1.0, 1.0) / radar_snr(eff, bf, 1.0, 1.0),
                   illum(other) / illum(eff)) < 1e-12


# -- QoS beamformer ----------------------------------------------------------------

def check_feasible(u, bf, p, gamma_th, s2):
    assert abs(np.vdot(bf.f, bf.f).real - p) <= 1e-9 * p
    assert comm_snr(u, bf.f, s2) >= gamma_th * (1 - 1e-9)


def test_qos_inactive_gives_mrt(rng):
    u, t = cn(rng, 4), cn(rng, 4)
    bf = optimize_beamformer_qos(u, t, 2.0, 0.0, 1.0)
    np.testing.assert_allclose(bf.f, mrt(t, 2.0), rtol=1e-12)


def test_qos_colinear(rng):
    u = cn(rng, 3)
    t = (0.4 - 1.1j) * u
    for gamma_th in (0.0, 0.5 * np.vdot(u, u).real, np.vdot(u, u).real):
        bf = optimize_beamformer_qos(u, t, 1.0, gamma_th, 1.0)
        assert abs(abs(np.vdot(u, bf.f)) - np.linalg.norm(u)) < 1e-9 * np.linalg.norm(u)


def test_qos_infeasible(rng):
    u, t = cn(rng, 3), cn(rng, 3)
    with pytest.raises(InfeasibleError):
        optimize_beamformer_qos(u, t, 1.0, 1.01 * np.vdot(u, u).real, 1.0)


def test_qos_against_grid_oracle():
    rng = np.random.default_rng(31)
    u, t = cn(rng, 4), cn(rng, 4)      # M=3 BS antennas plus one connection element
    p, s2 = 1.0, 1.0
    mrt_comm = abs(np.vdot(u, mrt(t, p))) ** 2
    gamma_th = mrt_comm + 0.5 * (np.vdot(u, u).real - mrt_comm)
    bf = optimize_beamformer_qos(u, t, p, gamma_th, s2, n_bs=3)
    check_feasible(u, bf, p, gamma_th, s2)
    _, grid = brute_beamformer_grid(u, t, p, gamma_th, s2)
    assert abs(np.vdot(t, bf.f)) ** 2 >= grid * (1 - 1e-3)
    assert bf.f_b.shape == (3,) and bf.f_r.shape == (1,)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 6))
def test_qos_constraint_monotonicity(seed, n):
    rng = np.random.default_rng(seed)
    u, t = cn(rng, n), cn(rng, n)
    top = np.vdot(u, u).real
    prev = math.inf
    for g in np.linspace(0, top, 12):
        bf = optimize_beamformer_qos(u, t, 1.0, g, 1.0)
        check_feasible(u, bf, 1.0, g, 1.0)
        val = abs(np.vdot(t, bf.f)) ** 2
        assert val <= prev * (1 + 1e-9)
        prev = val


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_qos_power_monotonicity(seed):
    rng = np.random.default_rng(seed)
    u, t = cn(rng, 3), cn(rng, 3)
    gamma_th = 0.8 * np.vdot(u, u).real
    prev = -math.inf
    for p in np.linspace(1.0, 5.0, 9):
        val = abs(np.vdot(t, optimize_beamformer_qos(u, t, p, gamma_th, 1.0).f)) ** 2
        assert val >= prev * (1 - 1e-9)
        prev = val


def test_qos_dominates_random_feasible(rng):
    u, t = cn(rng, 4), cn(rng, 4)
    p = 1.0
    gamma_th = 0.3 * np.vdot(u, u).real
    best = abs(np.vdot(t, optimize_beamformer_qos(u, t, p, gamma_th, 1.0).f)) ** 2
    found = 0
    while found < 1000:
        f = cn(rng, 4)
        f *= math.sqrt(p) / np.linalg.norm(f)
        if abs(np.vdot(u, f)) ** 2 < gamma_th:
            continue
        found += 1
        assert abs(np.vdot(t, f)) ** 2 <= best * (1 + 1e-9)


def test_qos_illumination_matches_solver(rng):
    for _ in range(50):
        u, t = cn(rng, 3), cn(rng, 3)
        g = rng.uniform(0, np.vdot(u, u).real)
        bf = optimize_beamformer_qos(u, t, 1.0, g, 1.0)
        val = qos_illumination(np.vdot(u, u).real, np.vdot(t, t).real,
                               abs(np.vdot(u, t)) ** 2, 1.0, g, 1.0)
        assert rel_err(float(val), abs(np.vdot(t, bf.f)) ** 2) < 1e-9
    assert np.isnan(qos_illumination(1.0, 1.0, 0.5, 1.0, 2.0, 1.0))


# -- joint design -------------------------------------------------------------------

def test_p2_without_qos_is_passive_radar_maximization(rng):
    ch = gaussian_isac(rng, 2, 6)
    sol = solve_p2(ch, 0, 1.0, 0.0, 1.0, 1.0)
    radar_only = ChannelSet(G=ch.G, h_d=ch.t_d, h_r=ch.t_r)
    _, tb2 = best_phases_for_mode(radar_only, ModeSelection(6))
    assert rel_err(sol.radar_snr, tb2 ** 2) < 1e-6
    eff = isac_effective_channels(ch, sol.mode, sol.phases)
    np.testing.assert_allclose(sol.beamformer.f, mrt(eff.t, 1.0), rtol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 3), st.floats(0.0, 1.0))
def test_p2_feasibility_contract(seed, a, q):
    rng = np.random.default_rng(seed)
    ch = gaussian_isac(rng, 2, 6)
    p, s2 = 1.0, 0.5
    gamma_th = q * 4.0
    try:
        sol = solve_p2(ch, a, p, gamma_th, 0.7, s2)
    except InfeasibleError:
        return
    check_feasible(isac_effective_channels(ch, sol.mode, sol.phases).u, sol.beamformer,
                   p, gamma_th, s2)
    assert sol.mode.a == a
    assert rel_err(sol.comm_snr, comm_snr(isac_effective_channels(ch, sol.mode, sol.phases).u,
                                          sol.beamformer.f, s2)) < 1e-12
    trace = np.asarray(sol.radar_trace)
    assert np.all(np.diff(trace) >= -1e-10 * np.abs(trace[1:]))


def test_p2_infeasible_everywhere(rng):
    ch = gaussian_isac(rng, 2, 4)
    with pytest.raises(InfeasibleError):
        solve_p2(ch, 1, 1.0, 1e6, 1.0, 1.0)


def test_fixed_mode_matches_evaluation(rng):
    ch = gaussian_isac(rng, 2, 6)
    mode = ModeSelection(6, (1, 2))
    sol = solve_fixed_mode(ch, mode, 1.0, 1.0, 1.0, 1.0)
    again = evaluate_isac(ch, mode, sol.phases, 1.0, 1.0, 1.0, 1.0)
    assert sol.mode == mode and rel_err(sol.radar_snr, again.radar_snr) < 1e-12


def test_p2_against_joint_brute_force():
    good = 0
    for seed in range(50):
        rng = np.random.default_rng(5000 + seed)
        ch = gaussian_isac(rng, 2, 6)
        gamma_th = rng.uniform(0.0, 10.0)
        try:
            _, _, oracle = brute_isac_search(ch, 1, 1.0, 1.0, gamma_th, 1.0)
        except InfeasibleError:
            with pytest.raises(InfeasibleError):
                solve_p2(ch, 1, 1.0, gamma_th, 1.0, 1.0)
            good += 1
            continue
        try:
            sol = solve_p2(ch, 1, 1.0, gamma_th, 1.0, 1.0)
        except InfeasibleError:
            continue
        good += sol.radar_snr >= 0.95 * oracle
    assert good >= 48
