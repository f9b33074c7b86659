"""Link geometry, planar-array steering vectors, path loss and Rician fading."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

RICIAN_K_CAP = 1e12


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform planar array of ``mx * my`` isotropic elements."""

    mx: int
    my: int
    wavelength: float
    dx: float | None = None
    dy: float | None = None

    def __post_init__(self):
        if self.mx < 1 or self.my < 1:
            raise ValueError("array dimensions must be positive")
        # half-wavelength spacing unless given
        if self.dx is None:
            object.__setattr__(self, "dx", self.wavelength / 2.0)
        if self.dy is None:
            object.__setattr__(self, "dy", self.wavelength / 2.0)

    @property
    def n_elements(self) -> int:
        return self.mx * self.my

    @property
    def k0(self) -> float:
        return 2.0 * math.pi / self.wavelength

    def element_offsets(self) -> tuple[np.ndarray, np.ndarray]:
        """(m*dx, n*dy) for every element, column-wise order ``m + n*mx``."""
        m = np.tile(np.arange(self.mx), self.my)
        n = np.repeat(np.arange(self.my), self.mx)
        return m * self.dx, n * self.dy


@dataclass(frozen=True)
class LinkGeometry:
    distance: float
    azimuth: float
    elevation: float
    radial_velocity: float
    doppler: float


@dataclass(frozen=True)
class ChannelVector:
    coefficients: np.ndarray
    large_scale_gain: float   # power gain, alpha**2


@dataclass(frozen=True)
class PathLossParams:
    reference_distance: float = 1.0
    exponent: float = 2.5
    shadow_sigma_db: float = 4.0
    rician_k: float = 10.0
    carrier_frequency_uav: float = 28e9
    carrier_frequency_hibs: float = 2e9

    def __post_init__(self):
        if self.shadow_sigma_db < 0:
            raise ValueError("shadow_sigma_db must be non-negative")


def link_geometry(node, user, prev_distance: float | None = None,
                  dt: float | None = None) -> LinkGeometry:
    """Distance, azimuth, elevation and range rate from ``node`` to ``user``.

    Without ``prev_distance`` the range rate is the analytic derivative of
    the distance along the user's velocity.
    """
    rel = np.asarray(user.position, float) - np.asarray(node.position, float)
    d = float(np.linalg.norm(rel))
    if d == 0.0:
        raise GeometryError(f"user {user.id} coincides with node {node.id}")
    h = float(node.position[2] - user.position[2])
    phi = math.atan2(rel[1], rel[0])
    theta = math.asin(min(1.0, max(-1.0, h / d)))
    if prev_distance is not None:
        if not dt or dt <= 0:
            raise ValueError("dt must be positive when prev_distance is given")
        vr = (d - prev_distance) / dt
    else:
        v = np.asarray(user.velocity, float)
        vr = float((rel[0] * v[0] + rel[1] * v[1]) / d)
    return LinkGeometry(d, phi, theta, vr, 2.0 * vr / node.wavelength)


def geometry_arrays(node_pos: np.ndarray, user_pos: np.ndarray,
                    user_vel: np.ndarray | None = None):
    """Vectorized link geometry for every (node, user) pair.

    Returns ``(d, phi, theta, vr)`` each shaped ``(n_nodes, n_users)``;
    ``vr`` is the analytic range rate (zeros if no velocities are given).
    """
    rel = user_pos[None, :, :] - node_pos[:, None, :]
    d = np.linalg.norm(rel, axis=-1)
    if np.any(d == 0.0):
        raise GeometryError("a user coincides with a node")
    phi = np.arctan2(rel[..., 1], rel[..., 0])
    h = node_pos[:, None, 2] - user_pos[None, :, 2]
    theta = np.arcsin(np.clip(h / d, -1.0, 1.0))
    if user_vel is None:
        vr = np.zeros_like(d)
    else:
        vr = (rel[..., 0] * user_vel[None, :, 0] + rel[..., 1] * user_vel[None, :, 1]) / d
    return d, phi, theta, vr


def steering_vector(array: ArrayGeometry, theta, phi) -> np.ndarray:
    """Unit-norm UPA response toward elevation ``theta`` and azimuth ``phi``.

    Broadcasts over array-valued angles; the element axis is last.  The
    receive response is defined identically, so this serves both.
    """
    theta = np.asarray(theta, float)[..., None]
    phi = np.asarray(phi, float)[..., None]
    mdx, ndy = array.element_offsets()
    phase = array.k0 * (mdx * np.sin(theta) * np.cos(phi) + ndy * np.sin(theta) * np.sin(phi))
    return np.exp(-1j * phase) / math.sqrt(array.n_elements)


receive_steering_vector = steering_vector


def free_space_gain(d, wavelength: float):
    """Power gain ``(lambda / (4 pi d))**2``."""
    return (wavelength / (4.0 * math.pi * np.asarray(d, float))) ** 2


def pathloss_db(d, params: PathLossParams, rng: np.random.Generator | None,
                wavelength: float):
    d = np.asarray(d, float)
    d0 = params.reference_distance
    if np.any(d < d0):
        log.warning("distance below reference distance %.3g m; clamped", d0)
        d = np.maximum(d, d0)
    pl0 = -10.0 * math.log10(free_space_gain(d0, wavelength))
    pl = pl0 + 10.0 * params.exponent * np.log10(d / d0)
    if params.shadow_sigma_db > 0 and rng is not None:
        pl = pl + rng.normal(0.0, params.shadow_sigma_db, np.shape(d))
    return pl


def pathloss_uav(d, params: PathLossParams, rng: np.random.Generator | None):
    """Log-distance path loss with log-normal shadowing as an amplitude gain.

    The reference loss is free space at ``reference_distance``.
    """
    wavelength = 299_792_458.0 / params.carrier_frequency_uav
    return 10.0 ** (-pathloss_db(d, params, rng, wavelength) / 20.0)


def _rician_weights(k: float) -> tuple[float, float]:
    if k < 0:
        raise ValueError("Rician factor must be non-negative")
    k = min(k, RICIAN_K_CAP)
    return math.sqrt(k / (k + 1.0)), math.sqrt(1.0 / (k + 1.0))


def nlos_component(rng: np.random.Generator, shape) -> np.ndarray:
    """i.i.d. CN(0, 1/N) entries over the last axis, so E||h||^2 = 1."""
    n = shape[-1]
    z = rng.standard_normal((*shape, 2))
    return (z[..., 0] + 1j * z[..., 1]) / math.sqrt(2.0 * n)


def rician_channel(geom: LinkGeometry, array: ArrayGeometry, alpha_los: float,
                   rician_k: float, rng: np.random.Generator) -> ChannelVector:
    """One UAV-to-UE channel: LoS steering term plus diffuse scattering,
    both scaled by the common large-scale amplitude."""
    w_los, w_nlos = _rician_weights(rician_k)
    a = steering_vector(array, geom.elevation, geom.azimuth)
    h = alpha_los * (w_los * a + w_nlos * nlos_component(rng, (array.n_elements,)))
    return ChannelVector(h, float(alpha_los) ** 2)


def rician_channels(theta: np.ndarray, phi: np.ndarray, alpha: np.ndarray,
                    array: ArrayGeometry, rician_k: float,
                    rng: np.random.Generator) -> np.ndarray:
    """Vectorized :func:`rician_channel`: returns ``(*theta.shape, N_t)``."""
    w_los, w_nlos = _rician_weights(rician_k)
    a = steering_vector(array, theta, phi)
    nlos = nlos_component(rng, (*np.shape(theta), array.n_elements))
    return np.asarray(alpha)[..., None] * (w_los * a + w_nlos * nlos)


def hibs_gain(d, wavelength: float):
    """Free-space power gain of the single-antenna HIBS link."""
    if np.any(np.asarray(d) <= 0):
        raise ValueError("distance must be positive")
    return free_space_gain(d, wavelength)
