import math
from dataclasses import replace

import numpy as np
import pytest

from conftest import make
from safeisac.errors import ConfigError
from safeisac.scenario import (
    LosGeometry,
    ScenarioConfig,
    db_to_linear,
    dbm_to_watts,
    generate_channels,
    los_channel,
    parse_config,
    parse_power,
    parse_ratio,
    path_loss,
    user_positions,
    with_detector_distance,
)


def test_unit_conversions():
    assert db_to_linear(10.0) == pytest.approx(10.0)
    assert dbm_to_watts(30.0) == pytest.approx(1.0)
    assert dbm_to_watts(-120.0) == pytest.approx(1e-15)
    assert path_loss(1.0, 3.5) == pytest.approx(1e-3)
    assert path_loss(10.0, 2.0) == pytest.approx(1e-5)


def test_default_powers_match_simulation_setup():
    cfg = ScenarioConfig()
    assert (cfg.n_tx, cfg.n_jam, cfg.n_users) == (16, 4, 4)
    assert cfg.p_c == pytest.approx(10 ** 0.6)
    assert cfg.p_s == pytest.approx(10 ** 0.8)
    assert cfg.p_j == pytest.approx(1.0)
    assert cfg.p_d == pytest.approx(1.0)
    assert cfg.sigma_n_sq == pytest.approx(1e-15)


def test_channel_shapes():
    cfg, ch = make(n_ris=7, n_jam=3, n_users=2, n_tx=5)
    assert ch.H.shape == (2, 5)
    assert ch.J.shape == (2, 3)
    assert ch.F_c.shape == (2, 7)
    assert ch.G_b.shape == (7, 5)
    assert ch.G_j.shape == (7, 3)
    assert ch.f_r.shape == ch.f_t.shape == ch.f_m.shape == (7,)
    assert ch.dims == (2, 5, 3, 7)


def test_same_seed_same_channels():
    _, a = make(seed=42)
    _, b = make(seed=42)
    _, c = make(seed=43)
    assert a.equals(b)
    assert not a.equals(c)


def test_link_substreams_are_independent_of_other_dimensions():
    _, a = make(seed=3, n_jam=2)
    _, b = make(seed=3, n_jam=8)
    np.testing.assert_array_equal(a.H, b.H)
    np.testing.assert_array_equal(a.G_b, b.G_b)
    np.testing.assert_array_equal(a.F_c, b.F_c)
    assert a.h_rd == b.h_rd


def test_detector_move_keeps_every_other_link():
    cfg, a = make(seed=5)
    b = generate_channels(with_detector_distance(cfg, 35.0))
    for name in ("H", "J", "F_c", "G_b", "G_j", "f_r", "f_t"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))
    assert a.los_r == b.los_r
    assert a.los_d.alpha != b.los_d.alpha


def test_with_detector_distance_places_detector():
    cfg = with_detector_distance(ScenarioConfig(), 12.5)
    t = cfg.geometry["target"]
    d = cfg.geometry["detector"]
    assert math.hypot(d[0] - t[0], d[1] - t[1]) == pytest.approx(12.5)
    with pytest.raises(ConfigError):
        with_detector_distance(cfg, 0.0)


def test_average_link_power_follows_path_loss():
    # Rician mixing keeps E|h|^2 = PL; averaged over many entries
    gains = []
    for s in range(40):
        cfg, ch = make(seed=s, n_ris=64)
        gains.append(np.mean(np.abs(ch.G_b) ** 2))
    d = math.dist(cfg.geometry["tx"], cfg.geometry["ris"])
    assert np.mean(gains) == pytest.approx(path_loss(d, 2.2), rel=0.05)


def test_los_channel_modulus_is_path_gain():
    g = LosGeometry(alpha=0.3, beta=0.4, phi=1.1)
    assert abs(los_channel(g)) == pytest.approx(0.3, rel=1e-14)


def test_users_inside_disc():
    cfg = replace(ScenarioConfig(), n_users=50)
    pos = user_positions(cfg)
    c = np.array(cfg.geometry["users"])
    assert np.all(np.linalg.norm(pos - c, axis=1) <= cfg.user_radius + 1e-12)


@pytest.mark.parametrize(
    "kw",
    [
        {"n_ris": 0},
        {"n_jam": -1},
        {"p_c": 0.0},
        {"sigma_d_sq": -1.0},
        {"beta_t": 0.7, "beta_r": 0.7},
        {"gamma_min": 0.0},
        {"seed": -1},
        {"g_th": -1.0},
    ],
)
def test_invalid_config_rejected(kw):
    with pytest.raises(ConfigError):
        replace(ScenarioConfig(), **kw)


def test_missing_geometry_node_rejected():
    geom = dict(ScenarioConfig().geometry)
    del geom["target"]
    with pytest.raises(ConfigError):
        replace(ScenarioConfig(), geometry=geom)


def test_degenerate_geometry_rejected():
    geom = dict(ScenarioConfig().geometry)
    geom["detector"] = geom["target"]
    cfg = replace(ScenarioConfig(), geometry=geom)
    with pytest.raises(ConfigError, match="degenerate"):
        generate_channels(cfg)


def test_parse_power_and_ratio():
    assert parse_power("6 dBW") == pytest.approx(10 ** 0.6)
    assert parse_power("30dBm") == pytest.approx(1.0)
    assert parse_power("2.5 W") == pytest.approx(2.5)
    assert parse_power("0.1") == pytest.approx(0.1)
    assert parse_ratio("-40 dB") == pytest.approx(1e-4)
    assert parse_ratio("3") == pytest.approx(3.0)
    with pytest.raises(ConfigError):
        parse_power("loud")


def test_parse_config_roundtrip():
    text = """
    # comment
    n_ris = 32
    p_c = 10 dBW
    gamma_min = -35 dB
    geometry.detector = 80, 25
    path_loss_exponents.direct = 3.0
    clip_penalty = true
    """
    cfg = parse_config(text)
    assert cfg.n_ris == 32
    assert cfg.p_c == pytest.approx(10.0)
    assert cfg.gamma_min == pytest.approx(10 ** -3.5)
    assert cfg.geometry["detector"] == (80.0, 25.0)
    assert cfg.geometry["tx"] == ScenarioConfig().geometry["tx"]
    assert cfg.path_loss_exponents["direct"] == 3.0
    assert cfg.clip_penalty is True


@pytest.mark.parametrize("text", ["bogus = 1", "n_ris = many", "n_ris 4", "geometry = 1,2", "geometry.tx = 1"])
def test_parse_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)
