import math

import pytest
from hypothesis import given, strategies as st

from sipls import scenario as sc
from sipls.scenario import (ConfigError, ConfigParseError, ConfigValidationError, build_config,
                            config_hash, db_to_linear, dbm_to_watts, default_config, dump_config,
                            effective_aperture, get_field, linear_to_db, load_config,
                            parse_config, replace_field, unit_power_density, watts_to_dbm)


def test_dbm_keys():
    cfg = parse_config("tx_power_max_dbm = 50\nrx_gain_dbi = 45\n")
    assert cfg.comm.tx_power_max == pytest.approx(100.0, rel=1e-12)
    assert cfg.radar.rx_gain == pytest.approx(31622.7766, rel=1e-8)


def test_cone_angle_is_full_beamwidth():
    cfg = parse_config("cone_angle_deg = 60")
    assert cfg.radar.cone_half_angle == pytest.approx(math.pi / 6, rel=1e-14)


def test_linear_and_db_forms_agree():
    a = parse_config("noise_bob_dbm = -90\nthresh_bob_db = 3")
    b = parse_config(f"noise_bob_w = 1e-12\nthresh_bob = {10 ** 0.3!r}")
    assert a.comm.noise_bob == pytest.approx(b.comm.noise_bob, rel=1e-12)
    assert a.comm.thresh_bob == pytest.approx(b.comm.thresh_bob, rel=1e-12)


def test_default_file_matches_defaults(cfg_path):
    assert load_config(cfg_path) == default_config()


def test_table_defaults(cfg):
    assert cfg.radar.sense_power == pytest.approx(0.01)
    assert cfg.comm.noise_bob == pytest.approx(1e-12)
    assert cfg.road.dt == pytest.approx(8 / 64)
    assert cfg.radar.target_range_bob == cfg.road.min_follow


def test_effective_aperture():
    r = default_config().radar
    assert effective_aperture(r) == pytest.approx(0.03828, rel=1e-3)
    import dataclasses
    unit = dataclasses.replace(r, rx_gain=1.0, wavelength=2 * math.sqrt(math.pi))
    assert effective_aperture(unit) == pytest.approx(1.0, rel=1e-14)


def test_unit_power_density():
    import dataclasses
    r = default_config().radar
    assert unit_power_density(r) == pytest.approx(25.16, rel=1e-3)
    assert unit_power_density(dataclasses.replace(r, sense_power=100.0)) == pytest.approx(2.516e5, rel=1e-3)
    assert unit_power_density(dataclasses.replace(r, sense_power=4 * math.pi, tx_gain=1.0)) == pytest.approx(1.0)


def test_zero_gain_rejected():
    with pytest.raises(ConfigValidationError):
        parse_config("rx_gain = 0")


@pytest.mark.parametrize("text", ["nonsense = 1", "tx_power_w = abc", "novalue", "tx_power_w = 1\ntx_power_dbm = 3",
                                  "carol_density = 1e-3\ncarol_density_m = 1e-3"])
def test_parse_errors(text):
    with pytest.raises(ConfigParseError):
        parse_config(text)


def test_carol_density_sets_both_fields():
    cfg = parse_config("carol_density = 0.002")
    assert cfg.road.carol_density_m2 == cfg.road.carol_density_m == 0.002


@pytest.mark.parametrize("text", ["lane_width = -1", "num_slots = 0", "rcs_dof = 0", "eve_lane = 3",
                                  "v_max = 0", "rel_min = 2"])
def test_validation_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")


def test_roundtrip(cfg):
    again = parse_config(dump_config(cfg))
    assert again == cfg


def test_comments_and_blank_lines():
    cfg = parse_config("# header\n\n  tx_power_w = 0.5   # inline\n")
    assert cfg.comm.tx_power == 0.5


def test_get_replace_field(cfg):
    assert get_field(cfg, "comm.noise_bob") == cfg.comm.noise_bob
    c2 = replace_field(cfg, "comm.noise_bob", 1e-9)
    assert c2.comm.noise_bob == 1e-9 and cfg.comm.noise_bob != 1e-9
    with pytest.raises(ConfigError):
        get_field(cfg, "comm.nothing")
    with pytest.raises(ConfigError):
        replace_field(cfg, "road.lane_width", -3.0)


def test_config_hash(cfg):
    assert config_hash(cfg) == config_hash(default_config())
    assert config_hash(cfg) != config_hash(replace_field(cfg, "comm.noise_bob", 2e-12))
    assert config_hash(cfg, 1.0) != config_hash(cfg, 2.0)
    assert len(config_hash(cfg)) == 16


def test_build_config_overrides():
    cfg = build_config({"min_follow": 7.0})
    assert cfg.radar.target_range_bob == 7.0


@given(st.floats(min_value=1e-12, max_value=1e12))
def test_db_roundtrip(x):
    assert db_to_linear(linear_to_db(x)) == pytest.approx(x, rel=1e-12)
    assert dbm_to_watts(watts_to_dbm(x)) == pytest.approx(x, rel=1e-12)


@given(st.floats(min_value=1e-15, max_value=1e3), st.floats(min_value=1e-6, max_value=1e-2))
def test_dump_roundtrip_property(noise, lam):
    cfg = replace_field(replace_field(default_config(), "comm.noise_eve", noise),
                        "road.eve_density", lam)
    again = parse_config(dump_config(cfg))
    assert again.comm.noise_eve == pytest.approx(noise, rel=1e-12)
    assert again.road.eve_density == pytest.approx(lam, rel=1e-12)


def test_lane_y(cfg):
    assert cfg.lane_y("alice") == cfg.lane_y("bob")
    assert abs(cfg.lane_y("carol") - cfg.lane_y("eve")) == pytest.approx(cfg.road.lane_width)
    assert abs(cfg.lane_y("carol") - cfg.lane_y("alice")) == pytest.approx(2 * cfg.road.lane_width)
