"""Slot-by-slot simulation of the UAV/HIBS network and its terrestrial benchmark."""
from __future__ import annotations

import copy
import itertools
import logging
import math
import time
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import _rng
from .access import (HIBS, LinkReport, associate, build_reuse_groups, channel_correlation,
                     mmse_zf_fallback, sinr_and_rate, snr_matrix, sus_select, tn_sinr)
from .channel import (ArrayGeometry, PathLossParams, geometry_arrays, hibs_gain, pathloss_uav,
                      rician_channels)
from .config import SimConfig
from .metrics import ConfusionMatrix, confusion, empirical_cdf, scores
from .scenario import (UserClass, init_users, place_hibs, place_terrestrial, place_uav_bs,
                       step_mobility)
from .sensing import (ZeroGainError, classify_motion, doppler_estimate, gain_noise,
                      normalized_gain, track_user)

log = logging.getLogger(__name__)

SINR_DB_FLOOR = -300.0


class SimulationError(RuntimeError):
    """A run failed; the message carries the slot at which it happened."""

    def __init__(self, slot: int, cause: Exception):
        super().__init__(f"slot {slot}: {cause}")
        self.slot = slot


class ConstraintViolation(RuntimeError):
    pass


@dataclass
class SensingRecord:
    user_id: int
    slot: int
    user_class: str
    serving_uav: int
    mu_hat: float
    sigma_v2: float
    confidence: float
    delta_proc: float
    predicted: bool
    truth: bool


@dataclass
class SimState:
    slot: int
    users: list
    nodes: list
    association: np.ndarray | None = None
    # distance of every (uav, user) link at the previous slot
    prev_distance: np.ndarray | None = None


@dataclass
class RunSummary:
    scenario: str
    seed: int
    gamma: float | None
    config: dict
    user_classes: dict
    links: list = field(default_factory=list)
    sensing: list = field(default_factory=list)
    tracking: list = field(default_factory=list)
    objective: list = field(default_factory=list)
    audit: dict = field(default_factory=dict)
    confusion: ConfusionMatrix = field(default_factory=ConfusionMatrix)
    wall_clock: float = 0.0

    @property
    def label(self) -> str:
        return "ntn" if self.scenario == "ntn" else f"tn_gamma_{self.gamma:g}"

    def sinr_db(self, klass: str | None = None) -> np.ndarray:
        vals = [r.sinr for r in self.links
                if klass is None or self.user_classes[r.user_id] == klass]
        return sinr_to_db(np.array(vals, float))

    def median_sinr_db(self, klass: str | None = None) -> float | None:
        v = self.sinr_db(klass)
        return float(np.median(v)) if v.size else None

    def cdf(self, klass: str | None = None):
        return empirical_cdf(self.sinr_db(klass))

    @property
    def scores(self):
        return scores(self.confusion)


def sinr_to_db(sinr) -> np.ndarray:
    s = np.asarray(sinr, float)
    with np.errstate(divide="ignore"):
        return np.maximum(10.0 * np.log10(s), SINR_DB_FLOOR)


def objective(rates, confidences, eta_c: float, eta_s: float) -> float:
    """Weighted communication/sensing utility of one slot."""
    return eta_c * float(np.sum(rates)) + eta_s * float(np.sum(confidences))


def _uav_params(cfg: SimConfig) -> PathLossParams:
    ch = cfg.channel
    return PathLossParams(ch.reference_distance, ch.exponent, ch.shadow_sigma_db, ch.rician_k,
                          ch.carrier_frequency_uav, ch.carrier_frequency_hibs)


def _tn_params(cfg: SimConfig) -> PathLossParams:
    tn = cfg.terrestrial
    return PathLossParams(tn.reference_distance, tn.exponent, tn.shadow_sigma_db, 0.0,
                          tn.carrier_frequency, tn.carrier_frequency)


def _new_summary(cfg: SimConfig, users, gamma) -> RunSummary:
    return RunSummary(cfg.engine.scenario, cfg.seed, gamma, cfg.to_dict(),
                      {u.id: u.klass.value for u in users})


def _select(cands, last_served, H_u, tau, s_max):
    """SUS over the users waiting longest first, topping up from newer tiers."""
    chosen: list = []
    order = sorted(cands, key=lambda i: (last_served[i], i))
    for _, tier in itertools.groupby(order, key=lambda i: last_served[i]):
        ids = sus_select([(i, H_u[i]) for i in tier], tau, s_max,
                         admitted=[(j, H_u[j]) for j in chosen])
        chosen = ids
        if len(chosen) >= s_max:
            break
    return chosen


class _Audit:
    def __init__(self, enabled: bool, p_t: float, tau: float):
        self.enabled, self.p_t, self.tau = enabled, p_t, tau
        self.counts = Counter(c1=0, c2=0, c3=0, precoders=0, mini_slots=0)

    def _fail(self, key: str, msg: str):
        self.counts[key] += 1
        if self.enabled:
            raise ConstraintViolation(msg)

    def precoder(self, prec, H_u):
        self.counts["precoders"] += 1
        if abs(prec.power - self.p_t) > 1e-9 * self.p_t:
            self._fail("c1", f"trace(WW^H)={prec.power!r} != P_t={self.p_t!r}")
        for a, b in itertools.combinations(range(len(prec.served)), 2):
            if channel_correlation(H_u[a], H_u[b]) >= self.tau:
                self._fail("c3", f"users {prec.served[a]},{prec.served[b]} violate SUS bound")

    def mini_slot(self, served_sets):
        self.counts["mini_slots"] += 1
        seen = Counter(i for s in served_sets for i in s)
        dup = [i for i, n in seen.items() if n > 1]
        if dup:
            self._fail("c2", f"users {dup} served twice in one mini-slot")

    def as_dict(self) -> dict:
        d = dict(self.counts)
        d["enabled"] = self.enabled
        d["violations"] = d["c1"] + d["c2"] + d["c3"]
        return d


def run(config: SimConfig, seed: int | None = None) -> RunSummary:
    """Simulate one scenario (``config.engine.scenario``) end to end."""
    cfg = copy.deepcopy(config)
    if seed is not None:
        cfg.seed = int(seed)
    cfg.validate()
    start = time.perf_counter()
    if cfg.engine.scenario == "tn":
        summary = _run_tn(cfg)
    else:
        summary = _run_ntn(cfg)
    summary.wall_clock = time.perf_counter() - start
    return summary


def _run_tn(cfg: SimConfig) -> RunSummary:
    sc, tn = cfg.scenario, cfg.terrestrial
    seed = cfg.seed
    users = init_users(sc, _rng.stream(seed, _rng.MOBILITY_INIT))
    wavelength = 299_792_458.0 / tn.carrier_frequency
    nodes = place_terrestrial(sc.n_tn, sc.gamma, sc.area_side, _rng.stream(seed, _rng.TN_LAYOUT),
                              height=sc.tn_height, wavelength=wavelength, tx_power=tn.p_tn)
    summary = _new_summary(cfg, users, sc.gamma)
    params = _tn_params(cfg)
    noise = cfg.access.noise_power(tn.bandwidth)
    ids = [u.id for u in users]
    for t in range(sc.n_slots):
        try:
            if t > 0:
                users = step_mobility(users, sc.dt, _rng.stream(seed, _rng.MOBILITY_STEP, t),
                                      sc.area_side, sc.accel_sigma)
            pos = np.array([u.position for u in users]).reshape(-1, 3)
            reports = tn_sinr(pos, nodes, params, tn.p_tn, noise,
                              _rng.stream(seed, _rng.TN_SHADOWING, t), tn.bandwidth,
                              wavelength, ids, slot=t)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise SimulationError(t, exc) from exc
        summary.links.extend(reports)
        summary.objective.append(objective([r.rate for r in reports], [],
                                           cfg.engine.eta_c, cfg.engine.eta_s))
    summary.audit = {"enabled": cfg.engine.audit, "c1": 0, "c2": 0, "c3": 0,
                     "violations": 0, "precoders": 0, "mini_slots": 0,
                     "surviving_bs": len(nodes)}
    return summary


def _run_ntn(cfg: SimConfig) -> RunSummary:
    sc, ch, ac, se = cfg.scenario, cfg.channel, cfg.access, cfg.sensing
    seed = cfg.seed
    lam_u, lam_h = ch.wavelength_uav, ch.wavelength_hibs
    array = ArrayGeometry(ch.mx, ch.my, lam_u)

    users = init_users(sc, _rng.stream(seed, _rng.MOBILITY_INIT))
    n_hot = len(sc.hotspot_centers) if sc.n_hotspot else 0
    uavs = place_uav_bs(users, sc.n_uav, n_hot, _rng.stream(seed, _rng.PLACEMENT),
                        altitude=sc.uav_altitude, area_side=sc.area_side, wavelength=lam_u,
                        tx_power=ac.p_uav, antenna=array, max_iter=sc.kmeans_max_iter,
                        tol=sc.kmeans_tol)
    hibs = place_hibs(sc.area_side, sc.hibs_altitude, lam_h, ac.p_hibs, node_id=len(uavs))
    schedule = build_reuse_groups([u.id for u in uavs], ac.reuse_groups)
    state = SimState(0, users, [*uavs, hibs])

    summary = _new_summary(cfg, users, None)
    audit = _Audit(cfg.engine.audit, ac.p_uav, ac.tau_sus)
    params = _uav_params(cfg)
    noise_u = ac.noise_power(ac.bandwidth_uav)
    noise_h = ac.noise_power(ac.bandwidth_hibs)
    rho = ac.rho_scale * noise_u
    uav_pos = np.array([u.position for u in uavs]).reshape(-1, 3)
    classify = set(se.classify_classes)

    K = len(users)
    last_served = np.full(K, -1)
    carrier_phase = np.zeros(K)
    pos_hist, vel_hist = [], []

    for t in range(sc.n_slots):
        try:
            if t > 0:
                users = step_mobility(users, sc.dt, _rng.stream(seed, _rng.MOBILITY_STEP, t),
                                      sc.area_side, sc.accel_sigma)
            state.slot, state.users = t, users
            pos = np.array([u.position for u in users]).reshape(-1, 3)
            vel = np.array([u.velocity for u in users]).reshape(-1, 2)
            pos_hist.append(pos)
            vel_hist.append(vel)
            speed = np.hypot(vel[:, 0], vel[:, 1])

            d, phi, theta, vr = geometry_arrays(uav_pos, pos, vel)
            alpha = pathloss_uav(d, params, _rng.stream(seed, _rng.SHADOWING, t))
            H = rician_channels(theta, phi, alpha, array, ch.rician_k,
                                _rng.stream(seed, _rng.FADING, t))
            chan_power = np.sum(np.abs(H) ** 2, axis=-1)
            uav_snr = snr_matrix(chan_power, ac.p_uav, noise_u)
            hibs_snr = ac.p_hibs * hibs_gain(np.linalg.norm(pos - hibs.position, axis=1),
                                             lam_h) / noise_h
            serving = associate(uav_snr, hibs_snr)
            state.association = serving

            if se.doppler_model == "speed":
                mu_true = 2.0 * speed / lam_u
            else:
                ref = np.where(serving == HIBS, np.argmax(uav_snr, axis=0), serving) \
                    if len(uavs) else np.zeros(K, int)
                mu_true = 2.0 * vr[ref, np.arange(K)] / lam_u if len(uavs) else np.zeros(K)

            slot_links: list[LinkReport] = []
            slot_conf: list[float] = []

            hibs_users = np.flatnonzero(serving == HIBS)
            if hibs_users.size:
                share = ac.bandwidth_hibs / hibs_users.size
                for i in hibs_users:
                    s = float(hibs_snr[i])
                    slot_links.append(LinkReport(int(i), s, share * math.log2(1.0 + s), "hibs",
                                                 hibs.id, t, -1))

            for m in range(schedule.n_groups):
                precoders = {}
                for u in schedule.active(m):
                    cands = np.flatnonzero(serving == u).tolist()
                    if not cands:
                        continue
                    chosen = _select(cands, last_served, H[u], ac.tau_sus, ac.s_max)
                    prec = mmse_zf_fallback(H[u, chosen], rho, ac.p_uav, ac.rho_min, chosen)
                    audit.precoder(prec, H[u, chosen])
                    precoders[u] = prec
                audit.mini_slot([p.served for p in precoders.values()])

                for u, prec in precoders.items():
                    served = prec.served
                    ext = np.zeros(len(served))
                    for v, other in precoders.items():
                        if v != u:
                            ext += np.sum(np.abs(H[v, served] @ other.W) ** 2, axis=1)
                    reports = sinr_and_rate(H[u, served], prec.W, noise_u, ext,
                                            ac.bandwidth_uav, served, serving_kind="uav",
                                            serving_id=u, slot=t, mini_slot=m)
                    slot_links.extend(reports)
                    for k, (i, rep) in enumerate(zip(served, reports)):
                        last_served[i] = t
                        rec = _sense(cfg, seed, t, users[i], u, H[u, i], prec.W[:, k],
                                     rep.sinr, carrier_phase[i], mu_true[i], lam_u)
                        if rec is None:
                            continue
                        summary.sensing.append(rec)
                        slot_conf.append(se.confidence_weight * rec.confidence)

            carrier_phase = np.mod(carrier_phase + 2.0 * math.pi * mu_true * sc.dt, 2.0 * math.pi)
            state.prev_distance = d
        except (ValueError, np.linalg.LinAlgError, ConstraintViolation) as exc:
            raise SimulationError(t, exc) from exc

        summary.links.extend(slot_links)
        summary.objective.append(objective([r.rate for r in slot_links], slot_conf,
                                           cfg.engine.eta_c, cfg.engine.eta_s))

    summary.confusion = confusion(
        [r for r in summary.sensing if r.user_class in classify])
    summary.audit = audit.as_dict()
    if pos_hist and len(uavs) >= 2:
        summary.tracking = _track(uavs, users, np.array(pos_hist), np.array(vel_hist),
                                  lam_u, sc.dt, se.det_floor)
    return summary


def _sense(cfg, seed, t, user, uav_id, h, w, sinr, phase0, mu, wavelength):
    """Two gain samples one pulse interval apart on the served beam."""
    se = cfg.sensing
    delta_proc = sinr * se.g_proc
    if delta_proc <= 0:
        return None
    hw = complex(np.dot(h, w))
    rng = _rng.stream(seed, _rng.SENSING_NOISE, t, user.id)
    n1 = gain_noise(hw, delta_proc, rng) if se.inject_noise else None
    n2 = gain_noise(hw, delta_proc, rng) if se.inject_noise else None
    try:
        g1 = normalized_gain(h, w, n1, rotation=phase0)
        g2 = normalized_gain(h, w, n2, rotation=phase0 + 2.0 * math.pi * mu * se.pulse_interval)
    except ZeroGainError:
        log.debug("slot %d user %d: zero beam gain, sensing skipped", t, user.id)
        return None
    est = doppler_estimate(g1, g2, se.pulse_interval, wavelength, delta_proc)
    truth = user.klass is UserClass.MOBILE and user.speed > se.v_min_moving
    dec = classify_motion(est, wavelength, se.v_min_moving, se.z_score, truth=truth,
                          user_id=user.id, slot=t)
    return SensingRecord(user.id, t, user.klass.value, uav_id, est.mu_hat, est.sigma_v2,
                         est.confidence, delta_proc, dec.predicted, dec.truth)


def _track(uavs, users, pos_hist, vel_hist, wavelength, dt, det_floor) -> list[dict]:
    uav_pos = np.array([u.position for u in uavs])
    ids = [u.id for u in uavs]
    rows = []
    for k, user in enumerate(users):
        if user.klass is not UserClass.MOBILE:
            continue
        tr = track_user(uav_pos, pos_hist[:, k], vel_hist[:, k], wavelength, dt, det_floor,
                        uav_ids=ids)
        for t in range(len(pos_hist)):
            rows.append({
                "user_id": user.id, "slot": t,
                "uav_1": int(tr["pairs"][t, 0]), "uav_2": int(tr["pairs"][t, 1]),
                "ref_uav": int(tr["reference_uav"]),
                "true_speed": float(tr["true_speed"][t]), "est_speed": float(tr["est_speed"][t]),
                "true_dist": float(tr["d_true"][t]), "est_dist": float(tr["d_hat"][t]),
            })
    return rows


def sweep_gamma(config: SimConfig, gammas=None) -> list[RunSummary]:
    """The NTN run followed by one terrestrial run per failure ratio."""
    gammas = list(config.engine.sweep_gammas if gammas is None else gammas)
    ntn = copy.deepcopy(config)
    ntn.engine.scenario = "ntn"
    out = [run(ntn)]
    for g in gammas:
        tn = copy.deepcopy(config)
        tn.engine.scenario = "tn"
        tn.scenario.gamma = float(g)
        out.append(run(tn))
    return out
