"""Post-disaster world: ground users, their mobility, and node placement."""
from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .config import ConfigError, ScenarioConfig


class UserClass(str, enum.Enum):
    HOTSPOT = "hotspot"
    VICTIM = "victim"
    MOBILE = "mobile"


class NodeKind(str, enum.Enum):
    UAV = "uav"
    HIBS = "hibs"
    TN = "tn"


@dataclass(frozen=True)
class UserState:
    id: int
    position: np.ndarray          # (x, y, z), z = 0
    velocity: np.ndarray          # (vx, vy)
    acceleration: np.ndarray      # (ax, ay)
    heading: float
    klass: UserClass

    @property
    def speed(self) -> float:
        return float(math.hypot(self.velocity[0], self.velocity[1]))


@dataclass(frozen=True)
class NodeState:
    id: int
    kind: NodeKind
    position: np.ndarray
    wavelength: float
    tx_power: float
    # ArrayGeometry for UAVs, None for single-antenna nodes
    antenna: object = field(default=None, compare=False)

    @property
    def altitude(self) -> float:
        return float(self.position[2])


def _disk(rng: np.random.Generator, n: int, center, radius: float) -> np.ndarray:
    r = radius * np.sqrt(rng.uniform(0.0, 1.0, n))
    a = rng.uniform(0.0, 2.0 * np.pi, n)
    return np.column_stack([center[0] + r * np.cos(a), center[1] + r * np.sin(a)])


def _split(total: int, parts: int) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + (1 if k < extra else 0) for k in range(parts)]


def init_users(config: ScenarioConfig, rng: np.random.Generator,
               heading: float | None = None) -> list[UserState]:
    """Create hotspot, victim and mobile users in that id order.

    ``heading`` forces the initial heading of every mobile user (used for
    reproducible hand-checked cases); otherwise headings are uniform.
    """
    config.validate()
    L = config.area_side
    xy_parts, classes = [], []

    if config.n_hotspot:
        for center, n in zip(config.hotspot_centers,
                             _split(config.n_hotspot, len(config.hotspot_centers))):
            xy_parts.append(_disk(rng, n, center, config.hotspot_radius))
            classes += [UserClass.HOTSPOT] * n
    if config.n_victim:
        for site, n in zip(config.victim_sites,
                           _split(config.n_victim, len(config.victim_sites))):
            xy_parts.append(_disk(rng, n, site, config.victim_radius))
            classes += [UserClass.VICTIM] * n
    n_mob = config.n_mobile
    if n_mob:
        xy_parts.append(rng.uniform(0.0, L, (n_mob, 2)))
        classes += [UserClass.MOBILE] * n_mob

    xy = np.clip(np.vstack(xy_parts), 0.0, L) if xy_parts else np.empty((0, 2))

    lo, hi = config.initial_speed_range
    speeds = rng.uniform(lo, hi, n_mob)
    psi = np.full(n_mob, heading) if heading is not None else rng.uniform(0.0, 2.0 * np.pi, n_mob)
    acc = rng.normal(0.0, config.accel_sigma, (n_mob, 2))

    users = []
    m = 0
    for uid, (pos, klass) in enumerate(zip(xy, classes)):
        if klass is UserClass.MOBILE:
            vel = np.array([speeds[m] * math.cos(psi[m]), speeds[m] * math.sin(psi[m])])
            a, h = acc[m].copy(), float(psi[m])
            m += 1
        else:
            vel, a, h = np.zeros(2), np.zeros(2), 0.0
        users.append(UserState(uid, np.array([pos[0], pos[1], 0.0]), vel, a, h, klass))
    return users


def _reflect(p: float, v: float, a: float, L: float) -> tuple[float, float, float]:
    # fold back until inside; a single fold suffices for realistic dt
    while p < 0.0 or p > L:
        if p < 0.0:
            p = -p
        else:
            p = 2.0 * L - p
        v, a = -v, -a
    return p, v, a


def step_mobility(users: list[UserState], dt: float, rng: np.random.Generator,
                  area_side: float, accel_sigma: float) -> list[UserState]:
    """Advance mobile users one slot with uniform acceleration.

    The acceleration held by each user drives this step; a fresh zero-mean
    acceleration with std ``accel_sigma`` is then drawn for the next one.
    With ``accel_sigma == 0`` the acceleration is held constant.
    Users leaving the square have the crossing velocity component reflected.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    mobile = [u for u in users if u.klass is UserClass.MOBILE]
    draws = rng.normal(0.0, accel_sigma, (len(mobile), 2)) if accel_sigma > 0 else None

    out, m = [], 0
    for u in users:
        if u.klass is not UserClass.MOBILE:
            out.append(u)
            continue
        p, v, a = u.position, u.velocity, u.acceleration
        x = p[0] + v[0] * dt + 0.5 * a[0] * dt * dt
        y = p[1] + v[1] * dt + 0.5 * a[1] * dt * dt
        vx = v[0] + a[0] * dt
        vy = v[1] + a[1] * dt
        ax, ay = a
        x, vx, ax = _reflect(x, vx, ax, area_side)
        y, vy, ay = _reflect(y, vy, ay, area_side)
        new_a = draws[m] if draws is not None else np.array([ax, ay])
        m += 1
        heading = math.atan2(vy, vx) if (vx or vy) else u.heading
        out.append(dataclasses.replace(
            u, position=np.array([x, y, 0.0]), velocity=np.array([vx, vy]),
            acceleration=np.array(new_a, dtype=float), heading=heading))
    return out


def true_speed_doppler(user: UserState, wavelength: float) -> float:
    """Doppler of the total ground speed, ``2 v / lambda`` in Hz."""
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    return 2.0 * user.speed / wavelength


def kmeans(points: np.ndarray, k: int, rng: np.random.Generator,
           max_iter: int = 50, tol: float = 1e-6) -> np.ndarray:
    """Lloyd's algorithm with k-means++ seeding.

    Nearest-centroid ties go to the lowest centroid index; a centroid that
    loses all its points stays where it was.
    """
    points = np.asarray(points, dtype=float)
    n = len(points)
    if k < 1 or n == 0:
        raise ValueError("kmeans needs k >= 1 and at least one point")

    centers = [points[rng.integers(n)]]
    for _ in range(1, k):
        d2 = np.min(((points[:, None, :] - np.array(centers)[None]) ** 2).sum(-1), axis=1)
        total = d2.sum()
        idx = rng.choice(n, p=d2 / total) if total > 0 else rng.integers(n)
        centers.append(points[idx])
    centers = np.array(centers)

    for _ in range(max_iter):
        d2 = ((points[:, None, :] - centers[None]) ** 2).sum(-1)
        labels = np.argmin(d2, axis=1)
        new = centers.copy()
        for j in range(k):
            members = points[labels == j]
            if len(members):
                new[j] = members.mean(axis=0)
        shift = np.max(np.linalg.norm(new - centers, axis=1))
        centers = new
        if shift < tol:
            break
    return centers


def place_uav_bs(users: list[UserState], n_uav: int, n_hotspots: int,
                 rng: np.random.Generator, *, altitude: float, area_side: float,
                 wavelength: float, tx_power: float, antenna=None,
                 max_iter: int = 50, tol: float = 1e-6) -> list[NodeState]:
    """One UAV over each hotspot cluster, the rest over the other users.

    Hotspot centroids come from k-means over hotspot users with
    ``k = n_hotspots``; the leftover UAVs go to k-means centroids of all
    non-hotspot users, or uniformly over the area if there are none.
    """
    hot = np.array([u.position[:2] for u in users if u.klass is UserClass.HOTSPOT]).reshape(-1, 2)
    rest = np.array([u.position[:2] for u in users if u.klass is not UserClass.HOTSPOT]).reshape(-1, 2)
    if len(hot) == 0:
        n_hotspots = 0
    if n_uav < n_hotspots:
        raise ConfigError(f"{n_uav} UAVs cannot cover {n_hotspots} hotspots")

    xy = []
    if n_hotspots:
        xy.append(kmeans(hot, n_hotspots, rng, max_iter, tol))
    left = n_uav - n_hotspots
    if left:
        if len(rest):
            xy.append(kmeans(rest, left, rng, max_iter, tol))
        else:
            xy.append(rng.uniform(0.0, area_side, (left, 2)))
    xy = np.vstack(xy) if xy else np.empty((0, 2))
    return [NodeState(i, NodeKind.UAV, np.array([p[0], p[1], altitude]), wavelength,
                      tx_power, antenna) for i, p in enumerate(xy)]


def place_hibs(area_side: float, altitude: float, wavelength: float, tx_power: float,
               node_id: int) -> NodeState:
    c = area_side / 2.0
    return NodeState(node_id, NodeKind.HIBS, np.array([c, c, altitude]), wavelength, tx_power)


def grid_shape(n: int) -> tuple[int, int]:
    """Rows and columns for ``n`` sites: the most square exact factorization,
    falling back to a row-major ceil grid when that is too elongated."""
    best = (1, n)
    for r in range(1, int(math.isqrt(n)) + 1):
        if n % r == 0:
            best = (r, n // r)
    if best[1] > 2 * best[0] and n > 3:
        cols = math.ceil(math.sqrt(n))
        return math.ceil(n / cols), cols
    return best


def place_terrestrial(n_b: int, gamma: float, area_side: float, rng: np.random.Generator, *,
                      height: float = 25.0, wavelength: float = 0.1499,
                      tx_power: float = 10.0) -> list[NodeState]:
    """Grid of ``n_b`` towers, of which ``round(gamma * n_b)`` are destroyed."""
    if n_b < 1:
        raise ConfigError("need at least one terrestrial BS")
    if not 0.0 <= gamma <= 1.0:
        raise ConfigError(f"gamma must lie in [0, 1], got {gamma}")
    rows, cols = grid_shape(n_b)
    sites = []
    for k in range(n_b):
        r, c = divmod(k, cols)
        sites.append(((c + 0.5) * area_side / cols, (r + 0.5) * area_side / rows))
    n_dead = int(math.floor(gamma * n_b + 0.5))
    # destroy a prefix of one seeded permutation, so for a fixed stream the
    # survivors at a larger gamma are a subset of those at a smaller one
    dead = set(rng.permutation(n_b)[:n_dead].tolist())
    return [NodeState(k, NodeKind.TN, np.array([x, y, height]), wavelength, tx_power)
            for k, (x, y) in enumerate(sites) if k not in dead]
