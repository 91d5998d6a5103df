"""RDARS configuration objects and the uplink effective-channel / SNR algebra."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np

from rdars.channel import ChannelSet
from rdars.errors import ConfigError, DegenerateChannelError

UNIT_MODULUS_TOL = 1e-12


@dataclass(frozen=True)
class ModeSelection:
    """Which of the ``n_total`` elements are wired to the BS (connection mode).

    ``connected`` is the strictly increasing index set; every other element
    reflects.
    """

    n_total: int
    connected: Tuple[int, ...] = ()

    def __post_init__(self):
        idx = tuple(int(i) for i in self.connected)
        object.__setattr__(self, "connected", idx)
        if self.n_total < 0:
            raise ConfigError("n_total must be non-negative")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ConfigError(f"connected indices must be strictly increasing: {idx}")
        if idx and (idx[0] < 0 or idx[-1] >= self.n_total):
            raise ConfigError(f"connected indices out of range 0..{self.n_total - 1}: {idx}")

    @classmethod
    def default(cls, n_total: int, a: int) -> "ModeSelection":
        """Reference assignment used for the distribution gain: the first ``a`` elements."""
        if not 0 <= a <= n_total:
            raise ConfigError(f"a={a} must lie in [0, {n_total}]")
        return cls(n_total, tuple(range(a)))

    @classmethod
    def from_indices(cls, n_total: int, indices: Iterable[int]) -> "ModeSelection":
        return cls(n_total, tuple(sorted(int(i) for i in indices)))

    @property
    def a(self) -> int:
        return len(self.connected)

    @property
    def diagonal(self) -> np.ndarray:
        """The 0/1 diagonal of the mode-selection matrix A."""
        d = np.zeros(self.n_total)
        d[list(self.connected)] = 1.0
        return d

    @property
    def reflecting(self) -> np.ndarray:
        """Boolean mask of reflection-mode elements (diagonal of I - A)."""
        return self.diagonal == 0

    def matrix(self) -> np.ndarray:
        return np.diag(self.diagonal)

    def selection_matrix(self) -> np.ndarray:
        """The a x N row-selection submatrix A_a."""
        sel = np.zeros((self.a, self.n_total))
        sel[np.arange(self.a), list(self.connected)] = 1.0
        return sel


@dataclass(frozen=True, eq=False)
class PhaseProfile:
    """Unit-modulus reflection coefficients for all N elements.

    Entries belonging to connection-mode elements are carried along but have
    no effect on any channel.
    """

    theta: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=complex).reshape(-1)
        if np.any(np.abs(np.abs(theta) - 1.0) > UNIT_MODULUS_TOL):
            raise ConfigError("phase profile entries must have unit modulus")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @classmethod
    def from_angles(cls, angles) -> "PhaseProfile":
        return cls(np.exp(1j * np.asarray(angles, dtype=float)))

    @classmethod
    def ones(cls, n: int) -> "PhaseProfile":
        return cls(np.ones(n, dtype=complex))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "PhaseProfile":
        return cls.from_angles(rng.uniform(0.0, 2 * np.pi, n))

    @classmethod
    def normalized(cls, values) -> "PhaseProfile":
        """Project arbitrary nonzero complex values onto the unit circle."""
        v = np.asarray(values, dtype=complex)
        return cls(v / np.abs(v))

    @property
    def N(self) -> int:
        return self.theta.shape[0]


@dataclass(frozen=True, eq=False)
class UplinkEffectiveChannel:
    h_b: np.ndarray
    h_c: np.ndarray

    @property
    def h(self) -> np.ndarray:
        return np.concatenate([self.h_b, self.h_c])


@dataclass(frozen=True)
class GainDecomposition:
    """Additive split of the optimized uplink SNR.

    ``total_snr = gamma_bar * (reflection_gain + distribution_gain + selection_gain)``
    """

    reflection_gain: float
    distribution_gain: float
    selection_gain: float
    total_snr: float


def cascaded_terms(G: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Per-element reflected contributions, shape (N, M).

    Row n is ``conj(G[n]) * r[n]`` so that ``G^H diag(theta) r = theta @ rows``.
    """
    return G.conj() * r[:, None]


def reflected_channel(direct: np.ndarray, G: np.ndarray, remote: np.ndarray,
                      mode: ModeSelection, phases: PhaseProfile) -> np.ndarray:
    """``direct + G^H (I - A) diag(theta) remote``."""
    _check_dims(G, direct, remote, mode, phases)
    masked = np.where(mode.reflecting, phases.theta, 0.0)
    return direct + G.conj().T @ (masked * remote)


def _check_dims(G, direct, remote, mode, phases):
    n, m = G.shape
    if direct.shape != (m,) or remote.shape != (n,):
        raise ConfigError("channel dimensions do not match G")
    if mode.n_total != n:
        raise ConfigError(f"mode selection has {mode.n_total} elements, channels have {n}")
    if phases.N != n:
        raise ConfigError(f"phase profile has {phases.N} entries, channels have {n}")


def effective_uplink_channel(channels: ChannelSet, mode: ModeSelection,
                             phases: PhaseProfile) -> UplinkEffectiveChannel:
    if channels.h_d is None:
        raise ConfigError("uplink channels (h_d, h_r) are missing")
    h_b = reflected_channel(channels.h_d, channels.G, channels.h_r, mode, phases)
    h_c = channels.h_r[list(mode.connected)]
    return UplinkEffectiveChannel(h_b=h_b, h_c=h_c)


def _gamma_bar(tx_power: float, noise_power: float) -> float:
    if not noise_power > 0:
        raise ConfigError(f"noise_power must be positive, got {noise_power}")
    if tx_power < 0:
        raise ConfigError(f"tx_power must be non-negative, got {tx_power}")
    return tx_power / noise_power


def uplink_snr(eff: UplinkEffectiveChannel, tx_power: float, noise_power: float) -> float:
    """MRC output SNR ``(p / sigma^2) * (||h_b||^2 + ||h_c||^2)``."""
    gamma_bar = _gamma_bar(tx_power, noise_power)
    return gamma_bar * float(np.vdot(eff.h_b, eff.h_b).real + np.vdot(eff.h_c, eff.h_c).real)


def mrc_combiner(eff: UplinkEffectiveChannel) -> np.ndarray:
    h = eff.h
    norm = np.linalg.norm(h)
    if norm == 0:
        raise DegenerateChannelError("MRC is undefined for an all-zero channel")
    return h / norm


def combined_snr(eff: UplinkEffectiveChannel, combiner: np.ndarray,
                 tx_power: float, noise_power: float) -> float:
    """Output SNR of an arbitrary linear combiner under equal per-branch noise."""
    gamma_bar = _gamma_bar(tx_power, noise_power)
    v = np.asarray(combiner, dtype=complex)
    return gamma_bar * abs(np.vdot(v, eff.h)) ** 2 / float(np.vdot(v, v).real)


def gain_decomposition(channels: ChannelSet, phases_opt: PhaseProfile, mode_opt: ModeSelection,
                       mode_default: ModeSelection, tx_power: float,
                       noise_power: float) -> GainDecomposition:
    if mode_opt.n_total != mode_default.n_total:
        raise ConfigError("mode_opt and mode_default differ in element count")
    gamma_bar = _gamma_bar(tx_power, noise_power)
    h_b = reflected_channel(channels.h_d, channels.G, channels.h_r, mode_opt, phases_opt)
    power = np.abs(channels.h_r) ** 2
    reflection = float(np.vdot(h_b, h_b).real)
    distribution = float(mode_default.diagonal @ power)
    selection = float((mode_opt.diagonal - mode_default.diagonal) @ power)
    total = gamma_bar * (reflection + distribution + selection)
    return GainDecomposition(reflection, distribution, selection, total)


def ris_approx_gains(channels: ChannelSet, phases_opt: PhaseProfile, mode_opt: ModeSelection,
                     mode_default: ModeSelection) -> Tuple[float, float, float]:
    """(G_RIS, G_DAS, G_Sel): as the decomposition, but with every element reflecting in G_RIS."""
    full = ModeSelection(mode_opt.n_total)
    h_ris = reflected_channel(channels.h_d, channels.G, channels.h_r, full, phases_opt)
    dec = gain_decomposition(channels, phases_opt, mode_opt, mode_default, 1.0, 1.0)
    return float(np.vdot(h_ris, h_ris).real), dec.distribution_gain, dec.selection_gain
