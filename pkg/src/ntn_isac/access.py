"""Association, reuse scheduling, SUS user selection, MMSE-ZF precoding and
per-user SINR / rate evaluation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import PathLossParams, pathloss_db
from .config import ConfigError

# serving index used for users attached to the high-altitude platform
HIBS = -1


class PrecoderError(np.linalg.LinAlgError):
    """The regularized Gram matrix could not be inverted."""


@dataclass
class ReuseSchedule:
    groups: list[list[int]]

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    def active(self, mini_slot: int) -> list[int]:
        return self.groups[mini_slot % len(self.groups)]


@dataclass
class Precoder:
    served: list[int]
    W: np.ndarray          # N_t x |S|
    beta: float
    rho: float
    W_raw: np.ndarray = field(repr=False)
    D: np.ndarray = field(repr=False)

    @property
    def power(self) -> float:
        return float(np.real(np.trace(self.W @ self.W.conj().T)))


@dataclass
class LinkReport:
    user_id: int
    sinr: float
    rate: float
    serving_kind: str
    serving_id: int
    slot: int = 0
    mini_slot: int = 0


def snr_matrix(channel_power: np.ndarray, p_t: float, noise: float) -> np.ndarray:
    """``P_t ||H||^2 / (N0 B)`` with inter-UAV interference ignored."""
    return p_t * np.asarray(channel_power) / noise


def associate(uav_snr: np.ndarray, hibs_snr: np.ndarray) -> np.ndarray:
    """Serving UAV index per user, or :data:`HIBS`.

    ``uav_snr`` is ``(U, K)``. The best UAV wins ties with the HIBS and the
    lowest UAV index wins ties among UAVs.
    """
    uav_snr = np.asarray(uav_snr, float)
    hibs_snr = np.asarray(hibs_snr, float)
    if uav_snr.shape[0] == 0:
        return np.full(hibs_snr.shape, HIBS, dtype=int)
    best = np.argmax(uav_snr, axis=0)
    best_snr = uav_snr[best, np.arange(uav_snr.shape[1])]
    return np.where(best_snr >= hibs_snr, best, HIBS).astype(int)


def build_reuse_groups(uav_ids, reuse_groups: int) -> ReuseSchedule:
    ids = sorted(uav_ids)
    if not 1 <= reuse_groups <= max(len(ids), 1):
        raise ConfigError(f"reuse_groups={reuse_groups} outside [1, {len(ids)}]")
    return ReuseSchedule([[u for k, u in enumerate(ids) if k % reuse_groups == g]
                          for g in range(reuse_groups)])


def channel_correlation(h_i: np.ndarray, h_j: np.ndarray) -> float:
    """Normalized inner-product magnitude ``|h_i h_j^H| / (||h_i|| ||h_j||)``."""
    num = abs(np.vdot(h_j, h_i))
    den = np.linalg.norm(h_i) * np.linalg.norm(h_j)
    return float(num / den) if den > 0 else 0.0


def sus_select(candidates, tau_sus: float, s_max: int, admitted=()) -> list[int]:
    """Greedy semi-orthogonal user selection.

    ``candidates`` and ``admitted`` are sequences of ``(user_id, h)``.
    Candidates are visited by decreasing channel power (ties by id) and
    admitted when their normalized correlation with every already admitted
    user stays below ``tau_sus``.  Returns ids of all admitted users,
    the pre-admitted ones first.
    """
    chosen = list(admitted)
    if len(chosen) >= s_max:
        return [uid for uid, _ in chosen[:s_max]]
    order = sorted(candidates, key=lambda c: (-float(np.vdot(c[1], c[1]).real), c[0]))
    for uid, h in order:
        if all(channel_correlation(h, hj) < tau_sus for _, hj in chosen):
            chosen.append((uid, h))
            if len(chosen) == s_max:
                break
    return [uid for uid, _ in chosen]


def mmse_zf(H: np.ndarray, rho: float, p_t: float, served=None) -> Precoder:
    """Regularized zero-forcing precoder with diagonal equalization.

    ``W_raw = H^H (H H^H + rho I)^-1``, ``D = diag(1/diag(H W_raw))`` and
    ``W = beta W_raw D`` with ``beta`` chosen so that ``tr(W W^H) = p_t``.
    """
    H = np.atleast_2d(np.asarray(H, complex))
    s, n = H.shape
    if s > n:
        raise ValueError(f"cannot serve {s} users with {n} antennas")
    if rho < 0:
        raise ValueError("rho must be non-negative")
    gram = H @ H.conj().T + rho * np.eye(s)
    if np.linalg.cond(gram) > 1e13:
        raise PrecoderError(f"Gram matrix singular to working precision (rho={rho:g})")
    try:
        W_raw = np.linalg.solve(gram, H).conj().T
    except np.linalg.LinAlgError as exc:
        raise PrecoderError(str(exc)) from exc
    diag = np.diag(H @ W_raw)
    if np.any(np.abs(diag) == 0):
        raise PrecoderError("zero effective gain on a served stream")
    D = np.diag(1.0 / diag)
    WD = W_raw @ D
    beta = math.sqrt(p_t / float(np.real(np.vdot(WD, WD))))
    return Precoder(list(served) if served is not None else list(range(s)),
                    beta * WD, beta, rho, W_raw, D)


def mmse_zf_fallback(H: np.ndarray, rho: float, p_t: float, rho_min: float,
                     served=None) -> Precoder:
    """:func:`mmse_zf`, retrying at ``max(rho, rho_min)`` on singularity."""
    try:
        return mmse_zf(H, rho, p_t, served)
    except PrecoderError:
        return mmse_zf(H, max(rho, rho_min), p_t, served)


def sinr_and_rate(H: np.ndarray, W: np.ndarray, sigma2: float, external=None,
                  bandwidth: float = 1.0, user_ids=None, **meta) -> list[LinkReport]:
    """SINR and Shannon rate of each served stream.

    ``external`` carries per-user co-channel power from other transmitters.
    Extra keyword arguments (``serving_kind``, ``serving_id``, ``slot``,
    ``mini_slot``) are copied into every report.
    """
    H = np.atleast_2d(H)
    G = np.abs(H @ W) ** 2
    s = G.shape[0]
    external = np.zeros(s) if external is None else np.asarray(external, float)
    signal = np.diag(G)
    intra = G.sum(axis=1) - signal
    sinr = signal / (intra + external + sigma2)
    ids = list(range(s)) if user_ids is None else list(user_ids)
    meta.setdefault("serving_kind", "uav")
    meta.setdefault("serving_id", 0)
    return [LinkReport(ids[k], float(sinr[k]), bandwidth * math.log2(1.0 + sinr[k]), **meta)
            for k in range(s)]


def tn_sinr(user_pos: np.ndarray, tn_nodes, params: PathLossParams, p_t: float,
            sigma2: float, rng: np.random.Generator | None, bandwidth: float,
            wavelength: float, user_ids=None, slot: int = 0) -> list[LinkReport]:
    """Single-antenna terrestrial downlink with full-buffer co-channel
    interference; each user attaches to its strongest surviving tower."""
    user_pos = np.atleast_2d(user_pos)
    ids = list(range(len(user_pos))) if user_ids is None else list(user_ids)
    if not tn_nodes:
        return [LinkReport(uid, 0.0, 0.0, "none", -1, slot, 0) for uid in ids]
    bs = np.array([n.position for n in tn_nodes])
    d = np.linalg.norm(user_pos[None, :, :] - bs[:, None, :], axis=-1)
    rx = p_t * 10.0 ** (-pathloss_db(d, params, rng, wavelength) / 10.0)
    best = np.argmax(rx, axis=0)
    cols = np.arange(rx.shape[1])
    signal = rx[best, cols]
    interference = rx.sum(axis=0) - signal
    sinr = signal / (interference + sigma2)
    return [LinkReport(uid, float(sinr[k]), bandwidth * math.log2(1.0 + sinr[k]), "tn",
                       int(tn_nodes[best[k]].id), slot, 0)
            for k, uid in enumerate(ids)]
