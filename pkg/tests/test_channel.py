import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sipls.channel import (FadingDraw, aggregate_interference, echo_power, rate, sample_fading,
                           sample_rcs, sinr_bob, sinr_sense_alice, trsa_sr)
from sipls.geometry import RelativeOffset
from sipls.scenario import default_config, effective_aperture, unit_power_density

R = default_config().radar
AS = effective_aperture(R) * unit_power_density(R)


def test_echo_power():
    # 0.01 * 1e9 * 0.0039^2 / ((4 pi)^3 1e8), mpmath: 7.66477873014e-10
    assert echo_power(R, 1.0, 10.0, 4) == pytest.approx(7.664778730140066e-10, rel=1e-12)
    assert echo_power(R, 0.0, 10.0, 4) == 0.0
    assert echo_power(R, 1.0, 10.0, 4) / echo_power(R, 1.0, 20.0, 4) == pytest.approx(256.0)
    with pytest.raises(ValueError):
        echo_power(R, 1.0, 0.0, 4)


def test_aggregate_interference():
    o = RelativeOffset(3.0, 4.0)
    assert aggregate_interference([], R, 2) == 0.0
    assert aggregate_interference([(o, FadingDraw(1.0))], R, 2) == pytest.approx(AS / 25.0)
    assert aggregate_interference([(o, 1.0), (o, 1.0)], R, 2) == pytest.approx(2 * AS / 25.0)
    with pytest.raises(ValueError):
        aggregate_interference([(RelativeOffset(0, 0), 1.0)], R, 2)


@given(st.lists(st.tuples(st.floats(1, 100), st.floats(0, 50), st.floats(0, 10)), min_size=1, max_size=6),
       st.floats(0.1, 5))
def test_interference_linear_and_permutation_invariant(items, scale):
    pairs = [(RelativeOffset(dx, dy), h) for dx, dy, h in items]
    base = aggregate_interference(pairs, R, 4)
    assert aggregate_interference(pairs[::-1], R, 4) == pytest.approx(base, rel=1e-12)
    scaled = [(o, h * scale) for o, h in pairs]
    assert aggregate_interference(scaled, R, 4) == pytest.approx(base * scale, rel=1e-12, abs=1e-300)


def test_sinr_bob():
    lb = sinr_bob(0.01, FadingDraw(1.0), 10.0, 2, 1e-9, 0.0, 0.0)
    assert lb.sinr == pytest.approx(1e5)
    assert sinr_bob(0.0, 1.0, 10.0, 2, 1e-9, 0.0, 0.0).sinr == 0.0
    vals = [sinr_bob(0.01, 1.0, 10.0, 2, 1e-9, 0.0, i).sinr for i in (0, 1e-9, 1e-6, 1e-3, 1.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        sinr_bob(0.01, 1.0, 0.0, 2, 1e-9, 0.0, 0.0)


def test_sinr_sense_alice():
    e = echo_power(R, 1.0, R.target_range, 4)
    assert sinr_sense_alice(R, 1.0, 4, e, 0.0) == pytest.approx(1.0)
    assert sinr_sense_alice(R, 0.0, 4, 1e-12, 0.0) == 0.0
    v = sinr_sense_alice(R, R.rcs_mean, 4, 1e-12, 0.0)
    assert math.isfinite(v) and v > 0


def test_trsa_sr():
    assert trsa_sr(0.1, 0.9, [4.0], [1.0]) == pytest.approx(2.43)
    assert trsa_sr(0.1, 0.9, [1.0, 2.0], [3.0, 2.0]) == 0.0
    assert trsa_sr(1.0, 0.9, [4.0], [1.0]) == 0.0
    with pytest.raises(ValueError):
        trsa_sr(0.1, 0.9, [1.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        trsa_sr(0.1, 0.9, [], [])


@given(st.lists(st.tuples(st.floats(0, 10), st.floats(0, 10)), min_size=1, max_size=8),
       st.integers(0, 7), st.floats(0, 3))
def test_trsa_sr_monotone(rates, i, bump):
    rb = np.array([r[0] for r in rates])
    re = np.array([r[1] for r in rates])
    i %= len(rates)
    base = trsa_sr(0.2, 0.8, rb, re)
    assert base >= 0
    rb2 = rb.copy(); rb2[i] += bump
    re2 = re.copy(); re2[i] += bump
    assert trsa_sr(0.2, 0.8, rb2, re) >= base - 1e-12
    assert trsa_sr(0.2, 0.8, rb, re2) <= base + 1e-12


def test_rate():
    assert rate(1.0) == pytest.approx(1.0)
    assert rate(0.0) == 0.0


def test_fading_samples():
    rng = np.random.default_rng(1)
    h = sample_fading(rng, 10 ** 6)
    assert abs(h.mean() - 1.0) < 5e-3
    for z in (0.5, 1.0, 2.0):
        p = math.exp(-z)
        se = math.sqrt(p * (1 - p) / h.size)
        assert abs(np.mean(h >= z) - p) <= 3 * se


@pytest.mark.parametrize("dof", [1.0, 2.0, 4.0])
def test_rcs_samples(dof):
    r = dataclasses.replace(R, rcs_dof=dof, rcs_mean=1.5)
    s = sample_rcs(np.random.default_rng(2), r, 10 ** 6)
    assert abs(s.mean() - 1.5) < 0.005 * 1.5
    assert abs(s.var() - 1.5 ** 2 / dof) < 0.02 * 1.5 ** 2 / dof
