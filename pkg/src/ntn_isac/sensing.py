"""Monostatic sensing on the communication beams.

Doppler is read from the phase rotation of the normalized beam gain, its
reliability from a Cramer-Rao style variance proxy, and user kinematics
from range measurements of two well-separated UAVs.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np


class ZeroGainError(ValueError):
    """Beam and channel are orthogonal, so no phase can be measured."""


class ConditioningError(np.linalg.LinAlgError):
    """The two line-of-sight directions are too close to collinear."""


@dataclass(frozen=True)
class DopplerEstimate:
    mu_hat: float        # Hz
    sigma_v2: float      # (m/s)^2
    confidence: float
    delta_proc: float    # linear


@dataclass(frozen=True)
class MotionDecision:
    user_id: int
    slot: int
    predicted: bool
    truth: bool


@dataclass(frozen=True)
class TrackState:
    uav_pair: tuple[int, int]
    r_hat: np.ndarray           # 2 x 2, one unit LoS vector per row
    range_rates: np.ndarray
    velocity: np.ndarray
    speed: float


@dataclass
class DistanceTrack:
    reference_uav: int
    d_true: np.ndarray
    d_hat: np.ndarray
    mu_ref: np.ndarray


def gain_noise(hw: complex, delta_proc: float, rng: np.random.Generator) -> complex:
    """Complex Gaussian estimation noise of variance ``|hw|^2 / delta_proc``."""
    std = abs(hw) / math.sqrt(2.0 * delta_proc)
    return complex(std * rng.standard_normal(), std * rng.standard_normal())


def normalized_gain(h: np.ndarray, w: np.ndarray, noise: complex | None = None,
                    rotation: float = 0.0) -> complex:
    """Unit-modulus effective gain ``(h w) / |h w|``.

    ``rotation`` adds a carrier phase (radians) to ``h w`` before the
    optional additive ``noise`` is applied.
    """
    hw = complex(np.dot(h, w))
    if hw == 0:
        raise ZeroGainError("h . w is exactly zero")
    y = hw * complex(math.cos(rotation), math.sin(rotation))
    if noise is not None:
        y += noise
    if y == 0:
        raise ZeroGainError("noisy gain is exactly zero")
    return y / abs(y)


def estimate_doppler(g_prev: complex, g_next: complex, dt: float) -> float:
    """Doppler from the principal phase of ``conj(g_prev) g_next``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    return float(np.angle(np.conj(g_prev) * g_next)) / (2.0 * math.pi * dt)


def frequency_crb(delta_proc: float, t_obs: float) -> float:
    """Lower bound on the variance of a single-tone frequency estimate."""
    return 1.0 / (8.0 * math.pi ** 2 * delta_proc * t_obs ** 2)


def crb_variance(wavelength: float, dt: float, delta_proc: float) -> float:
    """Velocity-variance proxy ``lambda^2 / (8 pi^2 dt^2 delta_proc)``."""
    if delta_proc <= 0:
        raise ValueError("delta_proc must be positive")
    return wavelength ** 2 / (8.0 * math.pi ** 2 * dt ** 2 * delta_proc)


def confidence(wavelength: float, dt: float, delta_proc: float) -> float:
    if delta_proc < 0:
        raise ValueError("delta_proc must be non-negative")
    return 2.0 * math.pi * dt * math.sqrt(delta_proc) / wavelength


def doppler_estimate(g_prev: complex, g_next: complex, dt: float, wavelength: float,
                     delta_proc: float) -> DopplerEstimate:
    return DopplerEstimate(estimate_doppler(g_prev, g_next, dt),
                           crb_variance(wavelength, dt, delta_proc),
                           confidence(wavelength, dt, delta_proc), delta_proc)


def classify_motion(est: DopplerEstimate, wavelength: float, v_min_moving: float,
                    z_score: float, *, truth: bool = False, user_id: int = -1,
                    slot: int = 0) -> MotionDecision:
    """Flag motion when the Doppler speed clears both the absolute floor and
    ``z_score`` standard deviations of the estimation noise."""
    v_hat = abs(est.mu_hat) * wavelength / 2.0
    threshold = max(v_min_moving, z_score * math.sqrt(est.sigma_v2))
    return MotionDecision(user_id, slot, bool(v_hat > threshold), bool(truth))


def transmit_gain(a_t: np.ndarray, w: np.ndarray) -> float:
    """Beamforming gain ``|a_t^H w|^2``."""
    return float(abs(np.vdot(a_t, w)) ** 2)


def radar_sinr(p_t: float, g_tx: float, wavelength: float, rcs: float, g_proc: float,
               distance: float, noise_power: float) -> float:
    """Monostatic radar-equation SINR, normalized by ``noise_power``."""
    if distance <= 0:
        raise ValueError("distance must be positive")
    num = p_t ** 2 * g_tx ** 2 * wavelength ** 2 * rcs * g_proc
    return num / ((4.0 * math.pi) ** 3 * distance ** 4 * noise_power)


def los_unit(uav_xy: np.ndarray, user_xy: np.ndarray) -> np.ndarray:
    rel = np.asarray(user_xy, float)[:2] - np.asarray(uav_xy, float)[..., :2]
    return rel / np.linalg.norm(rel, axis=-1, keepdims=True)


def select_uav_pair(uav_xy: np.ndarray, user_xy: np.ndarray, uav_ids=None) -> tuple[int, int]:
    """The UAV pair whose ground LoS directions are closest to orthogonal.

    Minimizes ``|r1 . r2|``; ties go to the lexicographically lowest ids.
    """
    uav_xy = np.atleast_2d(np.asarray(uav_xy, float))
    ids = list(range(len(uav_xy))) if uav_ids is None else list(uav_ids)
    if len(ids) < 2:
        raise ValueError("need at least two UAVs for geometric tracking")
    r = los_unit(uav_xy, user_xy)
    dots = np.abs(r @ r.T)
    order = sorted(range(len(ids)), key=ids.__getitem__)
    best, best_val = None, math.inf
    for a, b in itertools.combinations(order, 2):
        if dots[a, b] < best_val:
            best, best_val = (a, b), dots[a, b]
    a, b = best
    return tuple(sorted((ids[a], ids[b])))


def range_rate(d_now, d_prev, dt: float):
    if dt <= 0:
        raise ValueError("dt must be positive")
    return (np.asarray(d_now) - np.asarray(d_prev)) / dt


def solve_velocity(r1: np.ndarray, r2: np.ndarray, vr1: float, vr2: float,
                   det_floor: float = 0.05) -> tuple[np.ndarray, float]:
    """Ground velocity from two range rates along unit directions r1, r2."""
    A = np.array([r1, r2], dtype=float)
    if abs(np.linalg.det(A)) <= det_floor:
        raise ConditioningError(f"|det| = {abs(np.linalg.det(A)):.3g} below {det_floor}")
    v = np.linalg.solve(A, np.array([vr1, vr2], dtype=float))
    return v, float(np.hypot(v[0], v[1]))


def ground_range(slant: np.ndarray, altitude: float) -> np.ndarray:
    """Horizontal distance implied by a slant range and known altitude."""
    return np.sqrt(np.maximum(np.asarray(slant) ** 2 - altitude ** 2, 0.0))


def integrate_distance(d0: float, mu_ref, wavelength: float, dt: float) -> np.ndarray:
    """Range trajectory from accumulated Doppler, anchored at ``d0``.

    Doppler is positive for approaching targets (``mu = -2 d'/lambda``);
    the first sample of ``mu_ref`` only marks the anchor and is not used.
    """
    mu = np.asarray(mu_ref, float)
    if mu.size == 0:
        raise ValueError("mu_ref must be non-empty")
    if d0 <= 0:
        raise ValueError("d0 must be positive")
    out = np.empty(mu.size)
    out[0] = d0
    out[1:] = d0 - (wavelength / 2.0) * np.cumsum(mu[1:]) * dt
    return out


def track_user(uav_pos: np.ndarray, positions: np.ndarray, velocities: np.ndarray,
               wavelength: float, dt: float, det_floor: float = 0.05,
               reference_uav: int | None = None, uav_ids=None) -> dict:
    """Two-UAV speed tracking and Doppler range reconstruction for one user.

    ``positions`` (T, 3) and ``velocities`` (T, 2) are the user's true
    states per slot. Range rates come from finite differences of the ground
    ranges; the reference link Doppler is the instantaneous one. Returns
    per-slot arrays; slots without a solvable geometry carry NaN speed.
    """
    uav_pos = np.atleast_2d(np.asarray(uav_pos, float))
    ids = list(range(len(uav_pos))) if uav_ids is None else list(uav_ids)
    index = {uid: k for k, uid in enumerate(ids)}
    positions = np.asarray(positions, float)
    velocities = np.asarray(velocities, float)
    T = len(positions)

    rel = positions[None, :, :] - uav_pos[:, None, :]          # U, T, 3
    slant = np.linalg.norm(rel, axis=-1)
    # the UAVs measure slant range; fold out their known height above the user
    ground = ground_range(slant, (uav_pos[:, 2:3] - positions[None, :, 2]))

    true_speed = np.hypot(velocities[:, 0], velocities[:, 1])
    est_speed = np.full(T, np.nan)
    pairs = np.full((T, 2), -1, dtype=int)
    for t in range(1, T):
        try:
            u1, u2 = select_uav_pair(uav_pos, positions[t], ids)
        except ValueError:
            break
        k1, k2 = index[u1], index[u2]
        pairs[t] = (u1, u2)
        r = los_unit(uav_pos[[k1, k2]], positions[t])
        vr = range_rate(ground[[k1, k2], t], ground[[k1, k2], t - 1], dt)
        try:
            _, est_speed[t] = solve_velocity(r[0], r[1], vr[0], vr[1], det_floor)
        except ConditioningError:
            pass

    if reference_uav is None:
        k_ref = int(np.argmin(slant[:, 0]))
    else:
        k_ref = index[reference_uav]
    d_true = slant[k_ref]
    # instantaneous range rate along the user's velocity, approaching positive
    d_dot = (rel[k_ref, :, 0] * velocities[:, 0] + rel[k_ref, :, 1] * velocities[:, 1]) / d_true
    mu_ref = -2.0 * d_dot / wavelength
    d_hat = integrate_distance(float(d_true[0]), mu_ref, wavelength, dt)
    return {
        "true_speed": true_speed, "est_speed": est_speed, "pairs": pairs,
        "reference_uav": ids[k_ref], "d_true": d_true, "d_hat": d_hat, "mu_ref": mu_ref,
    }
