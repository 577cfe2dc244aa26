import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import eve_covered_by_alice_slot, geometric_interval
from sipls.geometry import constant_speed_track, initial_tracks
from sipls.scenario import build_config, replace_field
from sipls.window import WindowError, compute_window, emission_time, propagation_delay

C = 2.998e8


def _cfg(**kw):
    base = dict(carol_x=509.0, eve_x=9.0, horizon=20.0, num_slots=160)
    base.update(kw)
    return build_config(base)


def _win(cfg):
    return compute_window(cfg, initial_tracks(cfg))


def test_gap_500_times():
    w = _win(_cfg())
    assert (500 - math.sqrt(200 ** 2 - 3.6 ** 2)) / 32 == pytest.approx(9.376, abs=5e-4)
    assert w.t_carol_first == pytest.approx(9.376, abs=5e-4)
    assert w.t_carol_last == pytest.approx(15.430, abs=5e-4)
    assert 3.6 / math.tan(math.pi / 6) == pytest.approx(6.235, abs=5e-4)
    g0, g1 = geometric_interval(_cfg())
    assert abs(w.t_carol_first - g0) < 1e-6 and abs(w.t_carol_last - g1) < 1e-6
    dt = 20.0 / 160
    assert w.k_start == math.ceil(w.t_alice_first / dt)
    assert w.k_end == math.floor(w.t_alice_last / dt)
    assert not w.empty and 1 <= w.k_start <= w.k_end <= 160


def test_default_window(cfg):
    w = _win(cfg)
    assert (w.k_start, w.k_end) == (11, 58)
    assert list(w.slots) == list(range(11, 59))
    d = w.to_dict()
    assert d["empty"] is False and set(d) >= {"k_start", "k_end", "t_eve_first"}


def test_empty_when_inside_near_bound():
    w = _win(_cfg(carol_x=12.0))
    assert w.empty and list(w.slots) == []


def test_empty_when_window_beyond_horizon():
    w = _win(_cfg(carol_x=5009.0))
    assert w.empty


def test_propagation_delay():
    rx = constant_speed_track("alice", 0.0, 10.0, 0.0, 4, 0.1)
    assert propagation_delay((0.0, 0.0), rx, 0.0, C) == pytest.approx(10.0 / C, rel=1e-15)
    rx = constant_speed_track("eve", 0.0, 10.0, 16.0, 4, 0.1)
    t = propagation_delay((0.0, 0.0), rx, 0.0, C)
    assert t == pytest.approx(3.3356e-8, rel=1e-4)
    assert abs(t - 10.0 / C) / t < 1e-14
    rx = constant_speed_track("eve", 30.0, 10.0, 16.0, 4, 0.1)
    t = propagation_delay((0.0, 0.0), rx, 0.05, C)
    d = math.hypot(30.0 + 16.0 * (0.05 + t), 10.0)
    assert abs(C * t - d) <= 1e-9 * d
    with pytest.raises(WindowError):
        propagation_delay((0.0, 0.0), rx, 0.0, 10.0)


def test_emission_time_inverts_delay():
    tx = constant_speed_track("alice", 0.0, 0.0, 16.0, 80, 0.1)
    rx = constant_speed_track("eve", 40.0, 3.6, 16.0, 80, 0.1)
    t_e = 2.0
    x_r = 40.0 + 16.0 * t_e
    t_a = emission_time(tx, x_r, 3.6, t_e, C)
    assert t_a + propagation_delay((16.0 * t_a, 0.0), rx, t_a, C) == pytest.approx(t_e, abs=1e-15)


def test_replay_default(cfg):
    w = _win(cfg)
    for k in w.slots:
        assert eve_covered_by_alice_slot(cfg, k)
    assert not eve_covered_by_alice_slot(cfg, w.k_start - 1)
    assert not eve_covered_by_alice_slot(cfg, w.k_end + 1)


def test_infinite_speed_matches_geometry():
    cfg = replace_field(_cfg(), "comm.propagation_speed", 1e30)
    w = _win(cfg)
    g0, g1 = geometric_interval(cfg)
    assert w.t_carol_first == pytest.approx(g0, rel=1e-14)
    assert w.t_carol_last == pytest.approx(g1, rel=1e-14)
    assert w.t_alice_first == pytest.approx(g0, rel=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.3, 1.0), st.floats(0.5, 1.0))
def test_length_shrinks_with_cone(f_theta, f_range):
    base = _cfg()
    narrow = replace_field(base, "radar.cone_half_angle", base.radar.cone_half_angle * f_theta)
    short = replace_field(base, "radar.max_range", max(base.radar.max_range * f_range,
                                                       base.radar.target_range))
    n0 = len(_win(base).slots)
    assert len(_win(narrow).slots) <= n0
    assert len(_win(short).slots) <= n0
