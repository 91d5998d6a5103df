"""Random channel realizations for the uplink and ISAC scenarios.

Large-scale fading follows a power law in distance; small-scale fading is
Rician with a steering-vector line-of-sight component (Rayleigh when K = 0).
All arrays are modelled as half-wavelength ULAs laid out along the y-axis,
so a link's angle is measured from the x-z plane.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from rdars.errors import ConfigError, InvalidGeometryError

# link names used as keys of FadingParams maps
BS_RDARS = "bs_rdars"
USER_RDARS = "user_rdars"
USER_BS = "user_bs"
TARGET_RDARS = "target_rdars"
TARGET_BS = "target_bs"
LINKS = (BS_RDARS, USER_RDARS, USER_BS, TARGET_RDARS, TARGET_BS)


def db_to_linear(value_db: float) -> float:
    return float(10.0 ** (value_db / 10.0))


def linear_to_db(value: float) -> float:
    return float(10.0 * np.log10(value))


def dbm_to_watt(value_dbm: float) -> float:
    return db_to_linear(value_dbm - 30.0)


@dataclass(frozen=True)
class Geometry:
    """Node positions in meters."""

    bs_position: tuple = (0.0, 0.0, 10.0)
    rdars_position: tuple = (50.0, 0.0, 10.0)
    user_position: tuple = (45.0, 5.0, 1.5)
    target_position: Optional[tuple] = (55.0, 5.0, 1.5)

    def distance(self, a: str, b: str) -> float:
        pa = self._position(a)
        pb = self._position(b)
        d = float(np.linalg.norm(np.subtract(pa, pb)))
        if not d > 0:
            raise InvalidGeometryError(f"{a} and {b} are co-located (distance {d} m)")
        return d

    def angle(self, origin: str, toward: str) -> float:
        """Angle off broadside of the ULA at `origin` pointing at `toward`."""
        delta = np.subtract(self._position(toward), self._position(origin))
        d = float(np.linalg.norm(delta))
        if not d > 0:
            raise InvalidGeometryError(f"{origin} and {toward} are co-located")
        return float(np.arcsin(np.clip(delta[1] / d, -1.0, 1.0)))

    def _position(self, node: str) -> np.ndarray:
        pos = getattr(self, f"{node}_position", None)
        if pos is None:
            raise ConfigError(f"geometry has no {node}_position")
        return np.asarray(pos, dtype=float)


def _default_exponents() -> dict:
    return {BS_RDARS: 2.2, USER_RDARS: 2.5, TARGET_RDARS: 2.5, USER_BS: 3.5, TARGET_BS: 3.5}


def _default_k_factors() -> dict:
    return {BS_RDARS: db_to_linear(10.0), USER_RDARS: 0.0, TARGET_RDARS: 0.0, USER_BS: 0.0, TARGET_BS: 0.0}


@dataclass(frozen=True)
class FadingParams:
    """Path-loss and Rician parameters, keyed by link name."""

    pathloss_ref_gain: float = 1e-3
    pathloss_ref_distance: float = 1.0
    exponent_per_link: Mapping[str, float] = field(default_factory=_default_exponents)
    rician_k_per_link: Mapping[str, float] = field(default_factory=_default_k_factors)
    element_spacing: float = 0.5

    def __post_init__(self):
        if not self.pathloss_ref_gain > 0:
            raise ConfigError("pathloss_ref_gain must be positive")
        if not self.pathloss_ref_distance > 0:
            raise ConfigError("pathloss_ref_distance must be positive")
        for name, value in self.exponent_per_link.items():
            if value < 0:
                raise ConfigError(f"path-loss exponent for {name} is negative")
        for name, value in self.rician_k_per_link.items():
            if value < 0:
                raise ConfigError(f"Rician K-factor for {name} is negative")

    def exponent(self, link: str) -> float:
        try:
            return float(self.exponent_per_link[link])
        except KeyError:
            raise ConfigError(f"no path-loss exponent for link {link!r}") from None

    def k_factor(self, link: str) -> float:
        return float(self.rician_k_per_link.get(link, 0.0))


@dataclass(frozen=True, eq=False)
class ChannelSet:
    """All channel coefficients of one realization.

    Uplink realizations fill ``h_d`` (M,), ``h_r`` (N,) and ``G`` (N, M).
    ISAC realizations fill ``G`` together with ``u_d``, ``u_r``, ``t_d`` and
    ``t_r`` and leave ``h_d``/``h_r`` unset.
    """

    G: np.ndarray
    h_d: Optional[np.ndarray] = None
    h_r: Optional[np.ndarray] = None
    u_d: Optional[np.ndarray] = None
    u_r: Optional[np.ndarray] = None
    t_d: Optional[np.ndarray] = None
    t_r: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.G.ndim != 2:
            raise ConfigError("G must be an N x M matrix")
        n, m = self.G.shape
        isac = [self.u_d, self.u_r, self.t_d, self.t_r]
        if any(x is not None for x in isac) and not all(x is not None for x in isac):
            raise ConfigError("ISAC channels must be all present or all absent")
        expected = {"h_d": m, "h_r": n, "u_d": m, "u_r": n, "t_d": m, "t_r": n}
        for name, length in expected.items():
            vec = getattr(self, name)
            if vec is not None and vec.shape != (length,):
                raise ConfigError(f"{name} has shape {vec.shape}, expected ({length},)")

    @property
    def M(self) -> int:
        return self.G.shape[1]

    @property
    def N(self) -> int:
        return self.G.shape[0]

    @property
    def is_isac(self) -> bool:
        return self.u_d is not None

    def scaled(self, c: float) -> "ChannelSet":
        """Copy with every user/target-side vector multiplied by ``c``.

        G is left untouched, so every effective channel (direct, cascaded and
        connection) scales by exactly ``c``.
        """
        def s(x):
            return None if x is None else x * c
        return ChannelSet(G=self.G, h_d=s(self.h_d), h_r=s(self.h_r), u_d=s(self.u_d),
                          u_r=s(self.u_r), t_d=s(self.t_d), t_r=s(self.t_r))

    def digest(self) -> str:
        """Short content hash, used to log which realization a trial consumed."""
        h = hashlib.sha256()
        for name in ("G", "h_d", "h_r", "u_d", "u_r", "t_d", "t_r"):
            arr = getattr(self, name)
            if arr is not None:
                h.update(name.encode())
                h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()[:16]


def path_loss(distance: float, params: FadingParams, link: str) -> float:
    """Linear power gain ``ref_gain * (d / ref_dist) ** -exponent``."""
    if not distance > 0:
        raise InvalidGeometryError(f"distance must be positive, got {distance}")
    ratio = distance / params.pathloss_ref_distance
    return float(params.pathloss_ref_gain * ratio ** (-params.exponent(link)))


def steering_vector(n_elements: int, angle: float, spacing_wavelengths: float = 0.5) -> np.ndarray:
    k = np.arange(n_elements)
    return np.exp(1j * 2 * np.pi * spacing_wavelengths * k * np.sin(angle))


def sample_fading(
    dim: Union[int, Sequence[int]],
    mean_component: Optional[np.ndarray],
    k_factor: float,
    avg_power: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw ``sqrt(P) * (sqrt(K/(K+1)) * mean + sqrt(1/(K+1)) * w)``.

    ``w`` has i.i.d. CN(0, 1) entries. The scatter component is always drawn,
    even when ``avg_power`` is zero, so the generator advances identically
    for every parameter choice.
    """
    if avg_power < 0:
        raise ConfigError(f"avg_power must be non-negative, got {avg_power}")
    if k_factor < 0:
        raise ConfigError(f"k_factor must be non-negative, got {k_factor}")
    shape = (dim,) if np.isscalar(dim) else tuple(dim)
    w = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    if k_factor > 0:
        mean = np.broadcast_to(np.asarray(mean_component, dtype=complex), shape)
        out = np.sqrt(k_factor / (k_factor + 1)) * mean + np.sqrt(1 / (k_factor + 1)) * w
    else:
        out = w
    return np.sqrt(avg_power) * out


def _link_vector(geometry, params, node, array_node, length, link, rng):
    beta = path_loss(geometry.distance(node, array_node), params, link)
    mean = steering_vector(length, geometry.angle(array_node, node), params.element_spacing)
    return sample_fading(length, mean, params.k_factor(link), beta, rng)


def _bs_rdars_matrix(geometry, params, M, N, rng):
    beta = path_loss(geometry.distance("bs", "rdars"), params, BS_RDARS)
    a_r = steering_vector(N, geometry.angle("rdars", "bs"), params.element_spacing)
    a_b = steering_vector(M, geometry.angle("bs", "rdars"), params.element_spacing)
    mean = np.outer(a_r, a_b.conj())
    return sample_fading((N, M), mean, params.k_factor(BS_RDARS), beta, rng)


def generate_uplink_channels(
    geometry: Geometry, params: FadingParams, M: int, N: int, rng: np.random.Generator
) -> ChannelSet:
    """Draw (h_d, h_r, G) for one uplink realization; draw order is fixed."""
    if M < 1 or N < 1:
        raise ConfigError("M and N must be at least 1")
    G = _bs_rdars_matrix(geometry, params, M, N, rng)
    h_d = _link_vector(geometry, params, "user", "bs", M, USER_BS, rng)
    h_r = _link_vector(geometry, params, "user", "rdars", N, USER_RDARS, rng)
    return ChannelSet(G=G, h_d=h_d, h_r=h_r)


def generate_isac_channels(
    geometry: Geometry, params: FadingParams, M: int, N: int, rng: np.random.Generator
) -> ChannelSet:
    """Draw (G, u_d, u_r, t_d, t_r) for one ISAC realization."""
    if geometry.target_position is None:
        raise ConfigError("ISAC channels require geometry.target_position")
    if M < 1 or N < 1:
        raise ConfigError("M and N must be at least 1")
    G = _bs_rdars_matrix(geometry, params, M, N, rng)
    u_d = _link_vector(geometry, params, "user", "bs", M, USER_BS, rng)
    u_r = _link_vector(geometry, params, "user", "rdars", N, USER_RDARS, rng)
    t_d = _link_vector(geometry, params, "target", "bs", M, TARGET_BS, rng)
    t_r = _link_vector(geometry, params, "target", "rdars", N, TARGET_RDARS, rng)
    return ChannelSet(G=G, u_d=u_d, u_r=u_r, t_d=t_d, t_r=t_r)
