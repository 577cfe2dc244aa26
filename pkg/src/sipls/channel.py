"""Fading and RCS sampling, echo power, interference sums, SINR and secrecy rate."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scenario import effective_aperture, unit_power_density

__all__ = [
    "FadingDraw", "RcsDraw", "LinkBudget",
    "sample_fading", "sample_rcs", "echo_power", "aggregate_interference",
    "sinr_bob", "sinr_eve", "sinr_sense_alice", "rate", "trsa_sr",
]


@dataclass(frozen=True)
class FadingDraw:
    h: float


@dataclass(frozen=True)
class RcsDraw:
    sigma: float


@dataclass(frozen=True)
class LinkBudget:
    sinr: float
    signal: float
    noise: float
    echo_self: float
    interference: float


def sample_fading(rng, size=None):
    """Rayleigh power gain, Exp(1)."""
    return rng.standard_exponential(size)


def sample_rcs(rng, r, size=None):
    """Chi-square RCS with 2 delta degrees of freedom: Gamma(delta, mean/delta)."""
    return rng.gamma(r.rcs_dof, r.rcs_mean / r.rcs_dof, size)


def echo_power(r, sigma, rng_m, alpha):
    """Monostatic echo P G_t G_r lambda^2 sigma / ((4 pi)^3 R^{2 alpha})."""
    if np.any(np.asarray(rng_m) <= 0):
        raise ValueError("range must be positive")
    k = r.sense_power * r.tx_gain * r.rx_gain * r.wavelength ** 2 / (4.0 * math.pi) ** 3
    return k * sigma / np.power(rng_m, 2.0 * alpha)


def aggregate_interference(carols, r, alpha):
    """Sum of A_ea S h |d|^-alpha over (offset, fading) pairs."""
    if not carols:
        return 0.0
    coef = effective_aperture(r) * unit_power_density(r)
    total = 0.0
    for off, fad in carols:
        d2 = off.dx * off.dx + off.dy * off.dy
        if d2 == 0.0:
            raise ValueError("interferer at zero distance")
        h = fad.h if isinstance(fad, FadingDraw) else float(fad)
        total += coef * h * d2 ** (-alpha / 2.0)
    return total


def _link(p_com, h, dist, alpha, noise, echo, interf):
    if dist <= 0:
        raise ValueError("distance must be positive")
    signal = p_com * h * dist ** (-alpha)
    den = noise + echo + interf
    sinr = signal / den if den > 0 else (math.inf if signal > 0 else 0.0)
    return LinkBudget(sinr, signal, noise, echo, interf)


def sinr_bob(p_com, fading, dist, alpha, noise, echo, interf):
    h = fading.h if isinstance(fading, FadingDraw) else float(fading)
    return _link(p_com, h, dist, alpha, noise, echo, interf)


sinr_eve = sinr_bob


def sinr_sense_alice(r, sigma, alpha, noise, interf):
    return echo_power(r, sigma, r.target_range, alpha) / (noise + interf)


def rate(sinr):
    return np.log2(1.0 + np.asarray(sinr, dtype=float))


def trsa_sr(p_co, p_sr, rates_bob, rates_eve_max):
    rb = np.asarray(rates_bob, dtype=float)
    re = np.asarray(rates_eve_max, dtype=float)
    if rb.shape != re.shape:
        raise ValueError("rate vectors differ in length")
    if rb.size == 0:
        raise ValueError("empty rate vectors")
    return float((1.0 - p_co) * p_sr * np.mean(np.maximum(rb - re, 0.0)))
