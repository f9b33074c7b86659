import math

import numpy as np
import pytest

from ntn_isac.config import ConfigError, ScenarioConfig
from ntn_isac.scenario import (NodeKind, UserClass, UserState, grid_shape, init_users, kmeans,
                               place_hibs, place_terrestrial, place_uav_bs, step_mobility,
                               true_speed_doppler)


def _user(pos=(0.0, 0.0), vel=(0.0, 0.0), acc=(0.0, 0.0), klass=UserClass.MOBILE, uid=0):
    return UserState(uid, np.array([*pos, 0.0]), np.array(vel, float), np.array(acc, float),
                     0.0, klass)


def test_classes_partition(rng):
    users = init_users(ScenarioConfig(), rng)
    assert len(users) == 200
    assert [u.id for u in users] == list(range(200))
    counts = {k: sum(u.klass is k for u in users) for k in UserClass}
    assert counts == {UserClass.HOTSPOT: 60, UserClass.VICTIM: 20, UserClass.MOBILE: 120}
    for u in users:
        assert 0 <= u.position[0] <= 2000 and 0 <= u.position[1] <= 2000
        if u.klass is not UserClass.MOBILE:
            assert u.speed == 0 and not u.acceleration.any()


def test_no_mobile_users_are_static(rng):
    users = init_users(ScenarioConfig(n_mobile=0), rng)
    assert all(u.speed == 0 for u in users)


def test_forced_heading_speed(rng):
    cfg = ScenarioConfig(n_hotspot=0, n_victim=0, n_mobile=3, initial_speed_range=[2.0, 2.0])
    for u in init_users(cfg, rng, heading=0.0):
        np.testing.assert_allclose(u.velocity, [2.0, 0.0])


def test_init_deterministic():
    a = init_users(ScenarioConfig(), np.random.default_rng(42))
    b = init_users(ScenarioConfig(), np.random.default_rng(42))
    for u, v in zip(a, b):
        assert np.array_equal(u.position, v.position) and np.array_equal(u.velocity, v.velocity)


def test_user_count_validation(rng):
    with pytest.raises(ConfigError):
        init_users(ScenarioConfig(n_users=10), rng)


def test_kinematics_identity(rng):
    (u,) = step_mobility([_user((0, 0), (1, 0), (0, 1))], 1.0, rng, 100.0, 0.0)
    np.testing.assert_allclose(u.position[:2], [1.0, 0.5])
    np.testing.assert_allclose(u.velocity, [1.0, 1.0])


def test_constant_velocity_displacement(rng):
    (u,) = step_mobility([_user((50, 50), (3, 4))], 0.5, rng, 100.0, 0.0)
    assert math.dist(u.position[:2], (50, 50)) == pytest.approx(2.5)


def test_victim_unchanged(rng):
    v = _user((10, 10), klass=UserClass.VICTIM)
    (u,) = step_mobility([v], 3.0, rng, 100.0, 0.5)
    assert u is v


def test_reflection_keeps_inside(rng):
    (u,) = step_mobility([_user((99.0, 1.0), (4.0, -4.0))], 1.0, rng, 100.0, 0.0)
    assert 0 <= u.position[0] <= 100 and 0 <= u.position[1] <= 100
    np.testing.assert_allclose(u.position[:2], [97.0, 3.0])
    np.testing.assert_allclose(u.velocity, [-4.0, 4.0])


def test_bad_dt(rng):
    with pytest.raises(ValueError):
        step_mobility([], 0.0, rng, 1.0, 0.0)


@pytest.mark.parametrize("vel,lam,expected", [
    ((0, 0), 0.01, 0.0),
    ((3, 4), 0.01, 1000.0),
    ((1, 0), 0.0107, 186.92),
])
def test_true_speed_doppler(vel, lam, expected):
    assert true_speed_doppler(_user(vel=vel), lam) == pytest.approx(expected, abs=0.01)


def test_place_uav_identical_hotspot(rng):
    users = [_user((500, 500), klass=UserClass.HOTSPOT, uid=k) for k in range(5)]
    (uav,) = place_uav_bs(users, 1, 1, rng, altitude=120.0, area_side=2000.0,
                          wavelength=0.01, tx_power=1.0)
    np.testing.assert_allclose(uav.position, [500, 500, 120])
    assert uav.kind is NodeKind.UAV


def test_place_uav_two_clusters(rng):
    users = [_user(p, klass=UserClass.VICTIM, uid=k)
             for k, p in enumerate([(0, 0)] * 4 + [(1000, 1000)] * 4)]
    uavs = place_uav_bs(users, 2, 0, rng, altitude=120.0, area_side=2000.0,
                        wavelength=0.01, tx_power=1.0)
    got = sorted(tuple(u.position[:2]) for u in uavs)
    assert got == [(0.0, 0.0), (1000.0, 1000.0)]


def test_place_uav_deterministic():
    users = init_users(ScenarioConfig(), np.random.default_rng(3))
    kw = dict(altitude=120.0, area_side=2000.0, wavelength=0.01, tx_power=1.0)
    a = place_uav_bs(users, 10, 3, np.random.default_rng(9), **kw)
    b = place_uav_bs(users, 10, 3, np.random.default_rng(9), **kw)
    assert all(np.array_equal(x.position, y.position) for x, y in zip(a, b))


def test_hotspots_get_a_uav_each():
    cfg = ScenarioConfig()
    users = init_users(cfg, np.random.default_rng(5))
    uavs = place_uav_bs(users, 10, 3, np.random.default_rng(6), altitude=120.0,
                        area_side=2000.0, wavelength=0.01, tx_power=1.0)
    for c in cfg.hotspot_centers:
        assert min(math.dist(u.position[:2], c) for u in uavs) < cfg.hotspot_radius


def test_too_few_uavs(rng):
    users = [_user((0, 0), klass=UserClass.HOTSPOT)]
    with pytest.raises(ConfigError):
        place_uav_bs(users, 1, 3, rng, altitude=1.0, area_side=1.0, wavelength=1.0, tx_power=1.0)


def test_kmeans_ties_and_empty():
    pts = np.array([[0.0, 0.0], [10.0, 0.0]])
    c = kmeans(pts, 2, np.random.default_rng(0))
    assert sorted(map(tuple, c)) == [(0.0, 0.0), (10.0, 0.0)]
    with pytest.raises(ValueError):
        kmeans(np.empty((0, 2)), 1, np.random.default_rng(0))


@pytest.mark.parametrize("gamma,count", [(0.0, 40), (0.3, 28), (0.5, 20), (0.8, 8), (1.0, 0)])
def test_terrestrial_counts(gamma, count, rng):
    nodes = place_terrestrial(40, gamma, 2000.0, rng)
    assert len(nodes) == count
    assert all(n.kind is NodeKind.TN for n in nodes)


def test_terrestrial_nested():
    ids = [{n.id for n in place_terrestrial(40, g, 2000.0, np.random.default_rng(4))}
           for g in (0.0, 0.3, 0.5, 0.8)]
    assert ids[0] >= ids[1] >= ids[2] >= ids[3]


def test_terrestrial_bad_gamma(rng):
    with pytest.raises(ConfigError):
        place_terrestrial(40, 1.2, 2000.0, rng)


def test_grid_shape():
    assert grid_shape(40) == (5, 8)
    assert grid_shape(9) == (3, 3)
    r, c = grid_shape(7)
    assert r * c >= 7


def test_hibs_centered():
    h = place_hibs(2000.0, 20_000.0, 0.15, 1.0, node_id=10)
    np.testing.assert_allclose(h.position, [1000, 1000, 20_000])
    assert h.kind is NodeKind.HIBS and h.id == 10
