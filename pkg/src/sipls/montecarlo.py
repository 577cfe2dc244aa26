"""Brute-force Monte Carlo estimates of COP, SOP and SRP.

Trials are processed in fixed blocks of ``BLOCK`` trials. Block ``b`` draws
from ``SeedSequence(seed, spawn_key=(b,))``. A result therefore depends only
on (seed, trials), whatever the number of worker processes.

Planar interferer fields are sampled in a disc around each receiver. The
far field beyond radius R is replaced by its mean
2 pi lam A_ea S R^{2-alpha} / (alpha - 2); R is 20 characteristic radii
rho = (beta A_ea S / P)^{1/alpha} d, or less when that disc would hold more
than ``MAX_LOCAL_POINTS`` points on average.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .channel import echo_power
from .scenario import effective_aperture, unit_power_density

__all__ = [
    "McEstimate", "PppField", "Disc", "Annulus", "Segment", "TrialUnderflow",
    "sample_ppp", "estimate_cop", "estimate_sop", "estimate_sop_pair", "estimate_srp",
    "BLOCK", "DEFAULT_SEED", "binomial_stderr",
]

BLOCK = 1 << 16
DEFAULT_SEED = 12345
MIN_TRIALS = 1000
LOCAL_RADII = 20.0
MAX_LOCAL_POINTS = 400.0
EVE_TAIL = 40.0          # noise-only exponent at the edge of the Eve disc
SRP_SEGMENT_END = 2000.0


class TrialUnderflow(ValueError):
    pass


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    trials: int
    seed: int
    mode: str
    metric: str = ""


def binomial_stderr(p, n):
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)


def _estimate(count, trials, seed, mode, metric):
    m = count / trials
    return McEstimate(m, binomial_stderr(m, trials), int(trials), int(seed), mode, metric)


# -- PPP windows -------------------------------------------------------------

@dataclass(frozen=True)
class Disc:
    radius: float
    center: tuple = (0.0, 0.0)

    @property
    def measure(self):
        return math.pi * self.radius ** 2


@dataclass(frozen=True)
class Annulus:
    r_in: float
    r_out: float
    center: tuple = (0.0, 0.0)

    @property
    def measure(self):
        return math.pi * (self.r_out ** 2 - self.r_in ** 2)


@dataclass(frozen=True)
class Segment:
    lo: float
    hi: float
    y: float = 0.0

    @property
    def measure(self):
        return self.hi - self.lo


@dataclass(frozen=True)
class PppField:
    points: np.ndarray   # (n, 2)
    window: object
    density: float


def sample_ppp(density, window, rng):
    """Homogeneous PPP on a disc, annulus or segment."""
    if density < 0:
        raise ValueError("density must be nonnegative")
    mu = window.measure
    if not math.isfinite(mu):
        raise ValueError("window must have finite measure")
    n = rng.poisson(density * mu) if density > 0 else 0
    if isinstance(window, Segment):
        x = rng.uniform(window.lo, window.hi, n)
        pts = np.column_stack([x, np.full(n, window.y)])
    else:
        r_in = window.r_in if isinstance(window, Annulus) else 0.0
        r_out = window.r_out if isinstance(window, Annulus) else window.radius
        r = np.sqrt(r_in ** 2 + rng.uniform(size=n) * (r_out ** 2 - r_in ** 2))
        phi = rng.uniform(0.0, 2.0 * math.pi, n)
        pts = np.column_stack([window.center[0] + r * np.cos(phi),
                               window.center[1] + r * np.sin(phi)])
    return PppField(pts, window, density)


# -- block driver ------------------------------------------------------------

def _block_rng(seed, b):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))


def _run_one(args):
    kernel, seed, b, n, kw = args
    return kernel(_block_rng(seed, b), n, **kw)


def _run(kernel, trials, seed, workers, **kw):
    if trials < MIN_TRIALS:
        raise TrialUnderflow(f"need at least {MIN_TRIALS} trials, got {trials}")
    nb = -(-trials // BLOCK)
    jobs = [(kernel, seed, b, min(BLOCK, trials - b * BLOCK), kw) for b in range(nb)]
    if workers and workers > 1 and nb > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_run_one, jobs))
    else:
        parts = [_run_one(j) for j in jobs]
    return np.sum(np.asarray(parts, dtype=np.int64), axis=0)


def _tail_mean(lam, coef, radius, alpha):
    # E sum beyond radius of coef * r^-alpha for a planar PPP
    return 2.0 * math.pi * lam * coef * radius ** (2.0 - alpha) / (alpha - 2.0)


def _local_radius(lam, rho):
    r = LOCAL_RADII * rho
    if lam > 0:
        r = np.minimum(r, math.sqrt(MAX_LOCAL_POINTS / (math.pi * lam)))
    return r


def _ranges(starts, counts):
    """Concatenation of arange(s, s + c) for each pair."""
    total = int(counts.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64)
    offs = np.repeat(np.cumsum(counts) - counts, counts)
    return np.repeat(starts, counts) + (np.arange(total) - offs)


# -- COP ---------------------------------------------------------------------

_SHELLS = (0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0)


def _cop_block(rng, n, p_com, dist, alpha, beta, n0, lam, coef):
    """Outage count for a Bob at distance ``dist``; interferers in growing shells."""
    h = rng.standard_exponential(n)
    budget = h * p_com * dist ** (-alpha) / beta - n0   # tolerable interference
    if lam == 0.0:
        return int(np.count_nonzero(budget < 0))
    rho = (coef * beta / p_com) ** (1.0 / alpha) * dist
    R = float(_local_radius(lam, rho))
    edges = [e * rho for e in _SHELLS if e * rho < R] + [R]
    interf = np.zeros(n)
    live = np.flatnonzero(budget >= 0)
    for r1, r2 in zip(edges[:-1], edges[1:]):
        if live.size == 0:
            break
        cnt = rng.poisson(lam * math.pi * (r2 * r2 - r1 * r1), live.size)
        tot = int(cnt.sum())
        if tot:
            rr = r1 * r1 + rng.uniform(size=tot) * (r2 * r2 - r1 * r1)   # r^2
            g = rng.standard_exponential(tot)
            contrib = coef * g * rr ** (-alpha / 2.0)
            owner = np.repeat(np.arange(live.size), cnt)
            interf[live] += np.bincount(owner, weights=contrib, minlength=live.size)
        live = live[interf[live] <= budget[live]]
    interf += _tail_mean(lam, coef, R, alpha)
    return int(np.count_nonzero(interf > budget))


def _cop_scenario_block(rng, n, p_com, dist, alpha, beta, n0, lam_line, coef,
                        dy, near, far, rmax):
    """Outage count with Carols on the opposing lane, kept only if their cone covers Bob."""
    h = rng.standard_exponential(n)
    budget = h * p_com * dist ** (-alpha) / beta - n0
    cnt = rng.poisson(lam_line * 2.0 * rmax, n)
    tot = int(cnt.sum())
    dx = rng.uniform(-rmax, rmax, tot)      # Carol x relative to Bob; Carol faces -x
    covers = (dy < rmax) & (dx >= near) & (dx <= far)
    g = rng.standard_exponential(tot)
    contrib = np.where(covers, coef * g * (dx * dx + dy * dy) ** (-alpha / 2.0), 0.0)
    owner = np.repeat(np.arange(n), cnt)
    interf = np.bincount(owner, weights=contrib, minlength=n)
    return int(np.count_nonzero(interf > budget))


def estimate_cop(cfg, p_com, dist_ab, trials, seed=DEFAULT_SEED, mode="derivation_matched",
                 sigma_bob=None, workers=1):
    r, c = cfg.radar, cfg.comm
    alpha = c.path_loss_exp
    sigma = r.rcs_mean if sigma_bob is None else sigma_bob
    n0 = c.noise_bob + float(echo_power(r, sigma, r.target_range_bob, alpha))
    coef = effective_aperture(r) * unit_power_density(r)
    kw = dict(p_com=float(p_com), dist=float(dist_ab), alpha=alpha, beta=c.thresh_bob,
              n0=n0, coef=coef)
    if mode == "derivation_matched":
        count = _run(_cop_block, trials, seed, workers, lam=cfg.road.carol_density_m2, **kw)
    elif mode == "scenario":
        dy = 2.0 * cfg.road.lane_width
        rmax = r.max_range
        far = math.sqrt(rmax * rmax - dy * dy) if dy < rmax else -1.0
        count = _run(_cop_scenario_block, trials, seed, workers,
                     lam_line=cfg.road.carol_density_m, dy=dy,
                     near=dy / math.tan(r.cone_half_angle), far=far, rmax=rmax, **kw)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return _estimate(int(count), trials, seed, mode, "cop")


# -- SOP ---------------------------------------------------------------------

def _sop_block(rng, n, p_com, alpha, beta, n0, lam_e, lam_i, coef):
    """(any-Eve, nearest-Eve) intercept counts from one shared sample."""
    R_e = (EVE_TAIL * p_com / (beta * n0)) ** (1.0 / alpha)
    ne = rng.poisson(lam_e * math.pi * R_e * R_e, n)
    m = int(ne.sum())
    if m == 0:
        return 0, 0
    trial = np.repeat(np.arange(n), ne)
    r = R_e * np.sqrt(rng.uniform(size=m))
    phi = rng.uniform(0.0, 2.0 * math.pi, m)
    h = rng.standard_exponential(m)
    budget = h * p_com * r ** (-alpha) / beta - n0
    # nearest Eve of each trial
    order = np.lexsort((r, trial))
    first = np.ones(m, dtype=bool)
    first[1:] = trial[order][1:] != trial[order][:-1]
    nearest = np.zeros(m, dtype=bool)
    nearest[order[first]] = True

    cand = np.flatnonzero(budget >= 0)
    ok = np.zeros(m, dtype=bool)
    if cand.size and lam_i == 0.0:
        ok[cand] = True
    elif cand.size:
        ex, ey = r[cand] * np.cos(phi[cand]), r[cand] * np.sin(phi[cand])
        rho = (coef * beta / p_com) ** (1.0 / alpha) * r[cand]
        R_loc = _local_radius(lam_i, rho)
        # one interferer disc per trial, covering every candidate's local disc
        ct = trial[cand]
        trials_c, inv = np.unique(ct, return_inverse=True)
        R_f = np.zeros(trials_c.size)
        np.maximum.at(R_f, inv, r[cand] + R_loc)
        npts = rng.poisson(lam_i * math.pi * R_f * R_f)
        tot = int(npts.sum())
        pr = np.repeat(R_f, npts) * np.sqrt(rng.uniform(size=tot))
        pphi = rng.uniform(0.0, 2.0 * math.pi, tot)
        px, py = pr * np.cos(pphi), pr * np.sin(pphi)
        start = np.cumsum(npts) - npts
        # all candidate x point pairs within a trial
        pc = np.repeat(np.arange(cand.size), npts[inv])
        pp = _ranges(start[inv], npts[inv])
        d2 = (px[pp] - ex[pc]) ** 2 + (py[pp] - ey[pc]) ** 2
        g = rng.standard_exponential(pc.size)
        near = d2 < R_loc[pc] ** 2
        contrib = np.where(near, coef * g * np.maximum(d2, 1e-300) ** (-alpha / 2.0), 0.0)
        interf = np.bincount(pc, weights=contrib, minlength=cand.size)
        interf += _tail_mean(lam_i, coef, R_loc, alpha)
        ok[cand] = interf <= budget[cand]
    any_hit = np.zeros(n, dtype=bool)
    any_hit[trial[ok]] = True
    near_hit = np.zeros(n, dtype=bool)
    near_hit[trial[ok & nearest]] = True
    return int(any_hit.sum()), int(near_hit.sum())


def estimate_sop_pair(cfg, p_com, trials, seed=DEFAULT_SEED, sigma_eve=None, workers=1):
    """(any_eve, nearest_eve) estimates from one shared sample."""
    r, c = cfg.radar, cfg.comm
    alpha = c.path_loss_exp
    sigma = r.rcs_mean if sigma_eve is None else sigma_eve
    n0 = c.noise_eve + float(echo_power(r, sigma, r.target_range_eve, alpha))
    coef = effective_aperture(r) * unit_power_density(r)
    if trials < MIN_TRIALS:
        raise TrialUnderflow(f"need at least {MIN_TRIALS} trials, got {trials}")
    if cfg.road.eve_density == 0.0:
        counts = (0, 0)
    else:
        counts = _run(_sop_block, trials, seed, workers, p_com=float(p_com), alpha=alpha,
                      beta=c.thresh_eve, n0=n0, lam_e=cfg.road.eve_density,
                      lam_i=cfg.road.carol_density_m2, coef=coef)
    return (_estimate(int(counts[0]), trials, seed, "derivation_matched", "sop_any_eve"),
            _estimate(int(counts[1]), trials, seed, "derivation_matched", "sop_nearest_eve"))


def estimate_sop(cfg, p_com, trials, seed=DEFAULT_SEED, variant="any_eve", sigma_eve=None,
                 workers=1):
    if variant not in ("any_eve", "nearest_eve"):
        raise ValueError(f"unknown variant {variant!r}")
    pair = estimate_sop_pair(cfg, p_com, trials, seed, sigma_eve, workers)
    return pair[0] if variant == "any_eve" else pair[1]


# -- SRP ---------------------------------------------------------------------

def _srp_block(rng, n, shape, scale, unit_echo, noise, beta, mean_interf, lam, coef,
               lo, hi, alpha):
    sigma = rng.gamma(shape, scale, n)
    if mean_interf is not None:
        interf = mean_interf
    else:
        cnt = rng.poisson(lam * (hi - lo), n)
        tot = int(cnt.sum())
        d = rng.uniform(lo, hi, tot)
        g = rng.standard_exponential(tot)
        owner = np.repeat(np.arange(n), cnt)
        interf = np.bincount(owner, weights=coef * g * d ** (-alpha), minlength=n)
    return int(np.count_nonzero(sigma * unit_echo > beta * (noise + interf)))


def estimate_srp(cfg, trials, seed=DEFAULT_SEED, interference="mean", workers=1):
    """Ranging success with Gamma RCS; interference at its mean or random.

    Carols sit on a line at distances beyond 2 D_lane from Alice.
    """
    r, c = cfg.radar, cfg.comm
    alpha = c.path_loss_exp
    lam = cfg.road.carol_density_m
    coef = effective_aperture(r) * unit_power_density(r)
    lo, hi = 2.0 * cfg.road.lane_width, SRP_SEGMENT_END
    included = integrate.quad(lambda x: coef * lam * x ** (-alpha), lo, hi)[0]
    omitted = integrate.quad(lambda x: coef * lam * x ** (-alpha), hi, np.inf)[0]
    if included > 0 and omitted > 1e-6 * included:
        raise RuntimeError("SRP segment truncation too short")
    if interference == "mean":
        mean_interf = included + omitted
        mode = "mean_interference"
    elif interference == "random":
        mean_interf = None
        mode = "random_interference"
    else:
        raise ValueError(f"unknown interference model {interference!r}")
    unit_echo = float(echo_power(r, 1.0, r.target_range, alpha))
    count = _run(_srp_block, trials, seed, workers, shape=r.rcs_dof,
                 scale=r.rcs_mean / r.rcs_dof, unit_echo=unit_echo, noise=c.noise_alice,
                 beta=c.thresh_sense, mean_interf=mean_interf, lam=lam, coef=coef,
                 lo=lo, hi=hi, alpha=alpha)
    return _estimate(int(count), trials, seed, mode, "srp")
