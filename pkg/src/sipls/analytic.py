"""Closed-form connection outage, secrecy outage bounds and ranging success.

All closed forms assume a path-loss exponent of 4, Rayleigh fading on every
link and a planar PPP of Carols with areal density ``carol_density_m2``
(COP, SOP) or a line of Carols with density ``carol_density_m`` (SRP).

With a = pi lam_i C(4) sqrt(beta A_ea S / P) and b = beta (N + P_echo) / P,
the success probability of a receiver at distance r from Alice is
exp(-a r^2 - b r^4). COP evaluates it at r = d. The eavesdropper PPP turns
it into Gaussian integrals, written here with erfcx so that
exp(a^2 / 4b) never has to be formed.
"""
from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass
from typing import Optional

from .channel import echo_power
from .scenario import config_hash, effective_aperture, unit_power_density
from .special import erfcx, gammaincc

__all__ = [
    "MetricReport", "interference_constant", "cop_closed_form", "cop_exponent",
    "sop_upper", "sop_lower", "srp_closed_form", "srp_threshold",
    "mean_alice_interference", "metric_report",
    "cop_constraint_ok", "sop_constraint_ok", "srp_constraint_ok",
    "sop_power_cap", "AlphaError",
]

_SQRT_PI = math.sqrt(math.pi)
_c_scale = 1.0   # test hook, see corrupted_constant()


class AlphaError(ValueError):
    pass


@dataclass(frozen=True)
class MetricReport:
    cop: float
    sop_upper: float
    sop_lower: float
    srp: float
    trsa_sr: Optional[float] = None
    inputs_hash: str = ""


def interference_constant(alpha):
    """C(alpha) = Gamma(1 + 2/alpha) Gamma(1 - 2/alpha)."""
    if alpha <= 2:
        raise AlphaError("C(alpha) needs alpha > 2")
    return _c_scale * math.gamma(1.0 + 2.0 / alpha) * math.gamma(1.0 - 2.0 / alpha)


@contextlib.contextmanager
def corrupted_constant(factor):
    """Temporarily scale C(alpha); used to check that validation can fail."""
    global _c_scale
    old = _c_scale
    _c_scale = float(factor)
    try:
        yield
    finally:
        _c_scale = old


def _require_alpha4(cfg):
    if cfg.comm.path_loss_exp != 4.0:
        raise AlphaError(f"closed forms need path_loss_exp = 4, got {cfg.comm.path_loss_exp}")


def _as(cfg):
    return effective_aperture(cfg.radar) * unit_power_density(cfg.radar)


def _coeffs(cfg, p_com, beta, noise, echo):
    """(a, b) of the per-receiver success probability exp(-a r^2 - b r^4)."""
    if not p_com > 0:
        raise ValueError("p_com must be positive")
    lam = cfg.road.carol_density_m2
    a = math.pi * lam * interference_constant(4.0) * math.sqrt(beta * _as(cfg) / p_com)
    b = beta * (noise + echo) / p_com
    return a, b


def cop_exponent(cfg, p_com, dist_ab, sigma_bob=None):
    _require_alpha4(cfg)
    r = cfg.radar
    sigma = r.rcs_mean if sigma_bob is None else sigma_bob
    echo = echo_power(r, sigma, r.target_range_bob, 4.0)
    a, b = _coeffs(cfg, p_com, cfg.comm.thresh_bob, cfg.comm.noise_bob, echo)
    return a * dist_ab ** 2 + b * dist_ab ** 4


def cop_closed_form(cfg, p_com, dist_ab, sigma_bob=None):
    return -math.expm1(-cop_exponent(cfg, p_com, dist_ab, sigma_bob))


def _eve_coeffs(cfg, p_com, sigma_eve):
    _require_alpha4(cfg)
    r = cfg.radar
    sigma = r.rcs_mean if sigma_eve is None else sigma_eve
    echo = echo_power(r, sigma, r.target_range_eve, 4.0)
    return _coeffs(cfg, p_com, cfg.comm.thresh_eve, cfg.comm.noise_eve, echo)


def _gauss_tail(a, b):
    """int_0^inf exp(-a t - b t^2) dt."""
    if b == 0.0:
        return math.inf if a == 0.0 else 1.0 / a
    s = math.sqrt(b)
    return 0.5 * _SQRT_PI / s * erfcx(a / (2.0 * s))


def sop_upper(cfg, p_com, sigma_eve=None):
    """1 - exp(-lam_e pi int exp(-a t - b t^2) dt): mean number of successful Eves, Jensen."""
    a, b = _eve_coeffs(cfg, p_com, sigma_eve)
    lam_e = cfg.road.eve_density
    if lam_e == 0.0:
        return 0.0
    return -math.expm1(-lam_e * math.pi * _gauss_tail(a, b))


def sop_lower(cfg, p_com, sigma_eve=None):
    """Success probability of the nearest Eve."""
    a, b = _eve_coeffs(cfg, p_com, sigma_eve)
    lam_e = cfg.road.eve_density
    if lam_e == 0.0:
        return 0.0
    m = math.pi * lam_e
    return m * _gauss_tail(a + m, b)


def mean_alice_interference(cfg):
    """Mean interference from a Poisson line of Carols beyond 2 D_lane, alpha = 4."""
    return (cfg.road.carol_density_m * _as(cfg) / 3.0) * (2.0 * cfg.road.lane_width) ** -3


def srp_threshold(cfg):
    """RCS above which Alice's echo SINR (mean interference) exceeds beta_s."""
    _require_alpha4(cfg)
    r = cfg.radar
    unit_echo = echo_power(r, 1.0, r.target_range, 4.0)
    return cfg.comm.thresh_sense * (cfg.comm.noise_alice + mean_alice_interference(cfg)) / unit_echo


def srp_closed_form(cfg):
    r = cfg.radar
    x = r.rcs_dof / r.rcs_mean * srp_threshold(cfg)
    return gammaincc(r.rcs_dof, x)


def metric_report(cfg, p_com=None, dist_ab=None, sigma_bob=None, sigma_eve=None):
    p = cfg.comm.tx_power if p_com is None else p_com
    d = cfg.road.min_follow if dist_ab is None else dist_ab
    return MetricReport(
        cop=cop_closed_form(cfg, p, d, sigma_bob),
        sop_upper=sop_upper(cfg, p, sigma_eve),
        sop_lower=sop_lower(cfg, p, sigma_eve),
        srp=srp_closed_form(cfg),
        inputs_hash=config_hash(cfg, p, d, sigma_bob, sigma_eve),
    )


def cop_constraint_ok(report, th):
    return 1.0 - report.cop >= th.rel_min


def sop_constraint_ok(report, th):
    return report.sop_upper <= th.sec_max


def srp_constraint_ok(report, th):
    return report.srp >= th.sen_min


def sop_power_cap(cfg, p_max, sec_max, rtol=1e-12):
    """Largest p <= p_max with sop_upper(p) <= sec_max (sop_upper increases with p)."""
    if sop_upper(cfg, p_max) <= sec_max:
        return p_max
    lo, hi = 0.0, p_max
    while hi - lo > rtol * p_max:
        mid = 0.5 * (lo + hi)
        if mid > 0 and sop_upper(cfg, mid) <= sec_max:
            lo = mid
        else:
            hi = mid
    return lo
