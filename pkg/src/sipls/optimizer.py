"""Alternating power / trajectory optimization of the weighted secrecy rate.

Per slot k of the transmission window, with Alice at x_a:

    R_b = log2(1 + P s1),  s1 = 1 / ((N_b + I_b) d_ab^2)
    R_e = log2(1 + P s2),  s2 = 1 / ((N_e + I_e) d_ae^2)

N_b, N_e include the receiver's own radar echo; I_b, I_e sum the Carols
whose cone covers the receiver. The optimizer channel uses the path-loss
exponent ``opt_path_loss_exp`` (2), deterministic unit gains and perfect CSI.

Power step: bang-bang per slot, or a sum-power budget solved by bisection
on the Lagrange multiplier. Trajectory step: successive convex
approximation. The Bob term is linearized in u = d_ab^2 and the Eve
distance is linearized in x_a. This leaves a concave program in x_a with
linear constraints, which is solved by a log-barrier Newton method.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog, nnls

from . import analytic
from .channel import echo_power
from .geometry import in_sensing_cone, relative_offset
from .scenario import effective_aperture, unit_power_density

__all__ = [
    "SlotCoefficients", "OptRun", "OptimizerError", "SolverError",
    "slot_coefficients", "power_step", "budget_allocation", "trajectory_step",
    "solve_trajectory", "alternating_optimize", "objective", "kinematic_residuals",
    "W_FLOOR",
]

W_FLOOR = 1e-6
_LN2 = math.log(2.0)


class OptimizerError(ValueError):
    pass


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SlotCoefficients:
    """Per-slot link coefficients; arrays indexed by ``slots``."""
    slots: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    noise_bob: np.ndarray    # N_b + I_b
    noise_eve: np.ndarray    # N_e + I_e


@dataclass
class OptRun:
    power: np.ndarray            # per slot 0..N
    trajectory: np.ndarray       # Alice x per slot 0..N
    objective_trace: list
    iterations: int
    converged: bool
    constraint_report: dict
    initial_objective: float = 0.0
    weight: float = 1.0
    window: tuple = (0, -1)
    mode: str = "per_slot"
    baseline: str = "proposed"
    power_traces: list = field(default_factory=list)
    trajectory_traces: list = field(default_factory=list)
    kkt_residuals: list = field(default_factory=list)

    def to_dict(self):
        return {
            "mode": self.mode,
            "baseline": self.baseline,
            "window": list(self.window),
            "weight": self.weight,
            "initial_objective": self.initial_objective,
            "objective_trace": list(self.objective_trace),
            "iterations": self.iterations,
            "converged": self.converged,
            "power": self.power.tolist(),
            "trajectory": self.trajectory.tolist(),
            "kkt_residuals": list(self.kkt_residuals),
            "constraint_report": self.constraint_report,
        }


# -- channel coefficients ----------------------------------------------------

def _receiver_terms(cfg, tracks, baseline="proposed"):
    """Noise-plus-interference at Bob and Eve for slots 0..N (independent of Alice)."""
    r, c = cfg.radar, cfg.comm
    alpha = c.opt_path_loss_exp
    coef = effective_aperture(r) * unit_power_density(r)
    carols = [tracks[k] for k in tracks if k.startswith("carol")]
    n = len(tracks["bob"].x)
    out = {}
    for role, noise, rtar in (("bob", c.noise_bob, r.target_range_bob),
                              ("eve", c.noise_eve, r.target_range_eve)):
        tr = tracks[role]
        base = noise + float(echo_power(r, r.rcs_mean, rtar, alpha))
        interf = np.zeros(n)
        if not (role == "eve" and baseline == "traditional"):
            for k in range(n):
                for ct in carols:
                    off = relative_offset((ct.x[k], ct.y), (tr.x[k], tr.y), ct.heading)
                    if in_sensing_cone(off, r):
                        interf[k] += coef * (off.dx ** 2 + off.dy ** 2) ** (-alpha / 2.0)
        out[role] = base + interf
    return out["bob"], out["eve"]


def _check_alpha(cfg):
    if cfg.comm.opt_path_loss_exp != 2.0:
        raise OptimizerError("trajectory subproblem is formulated for opt_path_loss_exp = 2")


def slot_coefficients(cfg, tracks, x_alice, slots, baseline="proposed", terms=None):
    _check_alpha(cfg)
    slots = np.asarray(list(slots), dtype=int)
    nb, ne = terms if terms is not None else _receiver_terms(cfg, tracks, baseline)
    xa = np.asarray(x_alice, dtype=float)[slots]
    dab2 = (tracks["bob"].x[slots] - xa) ** 2
    dae2 = (tracks["eve"].x[slots] - xa) ** 2 + (tracks["eve"].y - tracks["alice"].y) ** 2
    return SlotCoefficients(slots, 1.0 / (nb[slots] * dab2), 1.0 / (ne[slots] * dae2),
                            nb[slots], ne[slots])


# -- power -------------------------------------------------------------------

def _stationary_power(s1, s2, lam):
    """P >= 0 solving s1/(1+s1 P) - s2/(1+s2 P) = lam (unclamped, may be < 0)."""
    a = 1.0 / s1
    if s2 == 0.0:
        return 1.0 / lam - a
    b = 1.0 / s2
    q = (b - a) / lam - a * b
    return 2.0 * q / ((a + b) + math.sqrt((a + b) ** 2 + 4.0 * q))


def _marginal(s1, s2, p):
    return s1 / (1.0 + s1 * p) - s2 / (1.0 + s2 * p)


def budget_allocation(coeffs, p_max, total, rtol=1e-13):
    """Sum-power-constrained allocation; returns (power, lambda)."""
    s1, s2 = np.asarray(coeffs.s1), np.asarray(coeffs.s2)
    n = s1.size
    if total > n * p_max * (1 + 1e-12):
        raise OptimizerError(f"infeasible budget: total {total} exceeds {n} x p_max")
    if total < 0:
        raise OptimizerError("budget must be nonnegative")
    active = np.flatnonzero(s1 > s2)
    p = np.zeros(n)
    if active.size == 0 or total == 0:
        return p, math.inf
    if active.size * p_max <= total:
        p[active] = p_max
        return p, 0.0

    def alloc(lam):
        return np.array([min(max(_stationary_power(s1[i], s2[i], lam), 0.0), p_max)
                         for i in active])

    lo = min(_marginal(s1[i], s2[i], p_max) for i in active)
    hi = max(s1[i] - s2[i] for i in active)
    # geometric bisection, sum(alloc) decreases in lambda
    for _ in range(400):
        mid = math.sqrt(lo * hi) if lo > 0 else 0.5 * (lo + hi)
        if alloc(mid).sum() > total:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rtol * hi:
            break
    lam = 0.5 * (lo + hi)
    p[active] = alloc(lam)
    # remove the residual bisection error on one unclamped slot
    free = [j for j, i in enumerate(active) if 0.0 < p[i] < p_max]
    if free:
        i = active[free[0]]
        p[i] = min(max(p[i] + total - p.sum(), 0.0), p_max)
    return p, lam


def power_step(coeffs, p_max, mode="per_slot", total=None):
    if len(coeffs.s1) == 0:
        raise OptimizerError("empty window")
    if mode == "per_slot":
        return np.where(np.asarray(coeffs.s1) > np.asarray(coeffs.s2), p_max, 0.0)
    if mode == "budget":
        if total is None:
            raise OptimizerError("budget mode needs a total")
        return budget_allocation(coeffs, p_max, total)[0]
    raise OptimizerError(f"unknown power mode {mode!r}")


# -- trajectory ----------------------------------------------------------------

def _anchors(x_full, k0, v0, dt):
    p1 = x_full[k0 - 1]
    p2 = x_full[k0 - 2] if k0 >= 2 else x_full[0] - v0 * dt
    return p1, p2


def _constraints(cfg, xb, p1, p2, n):
    """G z <= h for the kinematic and spacing limits of free slots z."""
    rd = cfg.road
    dt = rd.dt
    vstep, astep = rd.v_max * dt, rd.a_max * dt * dt
    rows, rhs = [], []
    for j in range(n):
        # z_j - z_{j-1}
        g = np.zeros(n)
        g[j] = 1.0
        c0 = 0.0
        if j >= 1:
            g[j - 1] -= 1.0
        else:
            c0 -= p1
        rows += [g, -g]
        rhs += [vstep - c0, vstep + c0]
        # z_j - 2 z_{j-1} + z_{j-2}
        g = np.zeros(n)
        g[j] = 1.0
        c1 = 0.0
        if j >= 1:
            g[j - 1] -= 2.0
        else:
            c1 -= 2.0 * p1
        if j >= 2:
            g[j - 2] += 1.0
        elif j == 1:
            c1 += p1
        else:
            c1 += p2
        rows += [g, -g]
        rhs += [astep - c1, astep + c1]
        # spacing
        g = np.zeros(n)
        g[j] = 1.0
        rows.append(g)
        rhs.append(xb[j] - rd.min_follow)
    return np.array(rows), np.array(rhs)


def kinematic_residuals(cfg, x, v0=None):
    """Max violation of speed, acceleration and spacing limits (0 when feasible)."""
    rd = cfg.road
    dt = rd.dt
    x = np.asarray(x, dtype=float)
    v = np.diff(x) / dt
    if v0 is not None:
        v = np.concatenate([[v0], v])
    acc = np.diff(v) / dt
    return {
        "speed": float(max(np.max(np.abs(v)) - rd.v_max, 0.0)),
        "accel": float(max(np.max(np.abs(acc), initial=0.0) - rd.a_max, 0.0)),
    }


def _p2_terms(z, c3, c4, xb, xe, dy2):
    u = (z - xb) ** 2
    w = (z - xe) ** 2 + dy2
    return np.log2(1.0 + c3 / u) - np.log2(1.0 + c4 / w)


def _newton_step(hess, grad):
    d = 1.0 / np.sqrt(np.abs(np.diag(hess)))
    hs = hess * d[:, None] * d[None, :]
    try:
        y = np.linalg.solve(hs, -grad * d)
    except np.linalg.LinAlgError:
        y = np.linalg.lstsq(hs, -grad * d, rcond=None)[0]
    return y * d


def _barrier_maximize(fun, G, h, z0, extra_ok, t0=1.0, mu=10.0, gap=1e-8, max_newton=100):
    """Maximize concave ``fun`` (value, grad, diag hess) over G z <= h from strictly feasible z0.

    Returns the final iterate and its KKT residual max(|grad f - G^T lam|, m/t),
    with lam = 1/(t s) the barrier dual estimate.
    """
    m = len(h)
    z = z0.copy()
    t = t0

    def value(z):
        s = h - G @ z
        if np.any(s <= 0) or not extra_ok(z):
            return math.inf
        return -t * fun(z, 0) - np.sum(np.log(s))

    while True:
        for _ in range(max_newton):
            s = h - G @ z
            f, g, H = fun(z, 2)
            val = -t * f - np.sum(np.log(s))
            grad = -t * g + G.T @ (1.0 / s)
            if np.max(np.abs(grad)) <= 1e-10 * t:
                break
            hess = (G.T * (1.0 / s ** 2)) @ G
            hess[np.diag_indices_from(hess)] -= t * H
            step = _newton_step(hess, grad)
            dec2 = float(-grad @ step)
            if not dec2 > 2e-10:
                break
            # largest step keeping the linear slacks positive
            Gs = G @ step
            pos = Gs > 0
            sm = min(1.0, 0.99 * float(np.min(s[pos] / Gs[pos]))) if np.any(pos) else 1.0
            while sm > 1e-16:
                cand = z + sm * step
                if value(cand) <= val - 0.25 * sm * dec2:
                    break
                sm *= 0.5
            else:
                break
            z = cand
        if m / t < gap:
            break
        t *= mu
    slack = h - G @ z
    lam = 1.0 / (t * slack)
    _, g, _ = fun(z, 1)
    kkt = max(float(np.max(np.abs(g - G.T @ lam))), m / t)
    # sharper multipliers from the near-active set
    act = np.flatnonzero(slack < 1e-5)
    if act.size:
        lam_a, _ = nnls(G[act].T, g)
        stat = g - G[act].T @ lam_a
        kkt = min(kkt, max(float(np.max(np.abs(stat))), float(np.max(lam_a * slack[act]))))
    return z, kkt


def _interior_point(G, h):
    """Phase I: a point maximizing the smallest slack of G z <= h."""
    n = G.shape[1]
    cost = np.zeros(n + 1)
    cost[-1] = -1.0
    A = np.hstack([G, np.ones((G.shape[0], 1))])
    bounds = [(None, None)] * n + [(None, 1.0)]
    res = linprog(cost, A_ub=A, b_ub=h, bounds=bounds, method="highs")
    if res.status != 0 or res.x[-1] <= 0:
        raise OptimizerError("trajectory constraints are infeasible")
    return res.x[:n]


def _strict_start(G, h, z, margin=1e-7):
    """z itself if comfortably interior, else z pulled toward a phase-I point."""
    if np.min(h - G @ z) > margin:
        return z
    zc = _interior_point(G, h)
    for theta in (1e-3, 1e-2, 0.1, 0.5):
        cand = z + theta * (zc - z)
        if np.min(h - G @ cand) > margin:
            return cand
    return zc


@dataclass
class TrajectoryResult:
    x: np.ndarray
    objective: float
    iterations: int
    kkt: float
    surrogate_gap: float


def solve_trajectory(x0, power, cfg, tracks, k_first, sca_tol=1e-7, sca_max_iter=30,
                     baseline="proposed", terms=None):
    """SCA on the Alice trajectory for slots k_first..N with the given powers."""
    _check_alpha(cfg)
    x0 = np.asarray(x0, dtype=float).copy()
    power = np.asarray(power, dtype=float)
    nfull = len(x0)
    N = nfull - 1
    if not 1 <= k_first <= N:
        raise OptimizerError("first free slot out of range")
    nb, ne = terms if terms is not None else _receiver_terms(cfg, tracks, baseline)
    idx = np.arange(k_first, N + 1)
    n = idx.size
    xb = tracks["bob"].x[idx]
    xe = tracks["eve"].x[idx]
    dy2 = (tracks["eve"].y - tracks["alice"].y) ** 2
    c3 = power[idx] / nb[idx]
    c4 = power[idx] / ne[idx]
    v0 = tracks["alice"].v[0]
    p1, p2 = _anchors(x0, k_first, v0, cfg.road.dt)
    G, h = _constraints(cfg, xb, p1, p2, n)
    if np.any(h - G @ x0[idx] < -1e-9):
        raise OptimizerError("initial trajectory violates the kinematic constraints")
    z = x0[idx].copy()
    true_obj = float(np.sum(_p2_terms(z, c3, c4, xb, xe, dy2)))
    it = 0
    kkt = 0.0
    gap_max = 0.0
    powered = c3 > 0
    while it < sca_max_iter:
        it += 1
        u0 = (z - xb) ** 2
        ck = np.where(powered, c3 / (_LN2 * (u0 * u0 + c3 * u0)), 0.0)
        lin = 2.0 * (z - xe)          # slope of the linearized Eve distance
        off = -z * z + xe * xe + dy2  # intercept
        const = np.log2(1.0 + np.where(powered, c3 / u0, 0.0)) + ck * u0
        # surrogate at the linearization point equals the true objective
        sur0 = float(np.sum(-ck * u0 + const - np.log2(1.0 + c4 / (lin * z + off))))
        gap_max = max(gap_max, abs(sur0 - true_obj))

        floor_rows = np.flatnonzero(powered & (lin != 0))
        Gf = np.zeros((floor_rows.size, n))
        Gf[np.arange(floor_rows.size), floor_rows] = -lin[floor_rows]
        hf = off[floor_rows] - W_FLOOR
        GG = np.vstack([G, Gf]) if floor_rows.size else G
        hh = np.concatenate([h, hf]) if floor_rows.size else h

        def fun(zz, order):
            L = lin * zz + off
            val = np.sum(-ck * (zz - xb) ** 2 - np.log2(1.0 + c4 / L))
            if order == 0:
                return val
            de = c4 / (L * (L + c4)) / _LN2
            grad = -2.0 * ck * (zz - xb) + de * lin
            d2 = -c4 * (2.0 * L + c4) / (L * (L + c4)) ** 2 / _LN2
            hess = -2.0 * ck + d2 * lin * lin
            return val, grad, hess

        def ok(zz):
            return np.all(lin * zz + off > 0)

        start = _strict_start(GG, hh, z)
        z_new, kkt = _barrier_maximize(fun, GG, hh, start, ok)
        if kkt > 1e-6:
            raise SolverError(f"barrier subproblem KKT residual {kkt:.3e} > 1e-6")
        new_obj = float(np.sum(_p2_terms(z_new, c3, c4, xb, xe, dy2)))
        if new_obj < true_obj:
            break
        gain = new_obj - true_obj
        z, true_obj = z_new, new_obj
        if gain < sca_tol:
            break
    x = x0.copy()
    x[idx] = z
    return TrajectoryResult(x, true_obj, it, kkt, gap_max)


def trajectory_step(x0, power, cfg, tracks, sca_tol=1e-7, sca_max_iter=30, k_first=None,
                    baseline="proposed"):
    power = np.asarray(power, dtype=float)
    if k_first is None:
        on = np.flatnonzero(power > 0)
        if on.size == 0:
            return np.asarray(x0, dtype=float).copy()
        k_first = int(on[0])
    return solve_trajectory(x0, power, cfg, tracks, k_first, sca_tol, sca_max_iter,
                            baseline).x


# -- alternating loop ----------------------------------------------------------

def objective(cfg, tracks, x_alice, power, weight, baseline="proposed", terms=None):
    """Weighted worst-case secrecy rate averaged over the N slots."""
    N = cfg.road.num_slots
    slots = np.arange(1, N + 1)
    cf = slot_coefficients(cfg, tracks, x_alice, slots, baseline, terms)
    p = np.asarray(power, dtype=float)[slots]
    rb = np.log2(1.0 + p * cf.s1)
    re = np.log2(1.0 + p * cf.s2)
    return weight * float(np.mean(np.maximum(rb - re, 0.0)))


def _metric_weight(cfg):
    if cfg.comm.path_loss_exp != 4.0:
        return 1.0
    p_co = analytic.cop_closed_form(cfg, cfg.comm.tx_power_max, cfg.road.min_follow)
    return (1.0 - p_co) * analytic.srp_closed_form(cfg)


def _jitter(cfg, tracks, x, k_first, rng, scale=0.25):
    """Random feasible perturbation of the free part of a trajectory."""
    rd = cfg.road
    dt = rd.dt
    for shrink in (1.0, 0.5, 0.25, 0.1):
        y = x.copy()
        v = (y[k_first - 1] - y[k_first - 2]) / dt if k_first >= 2 else tracks["alice"].v[0]
        acc = rng.uniform(-1.0, 1.0, len(y)) * scale * rd.a_max * shrink
        for k in range(k_first, len(y)):
            v = min(max(v + acc[k] * dt, -rd.v_max), rd.v_max)
            y[k] = y[k - 1] + v * dt
        res = kinematic_residuals(cfg, y, tracks["alice"].v[0])
        gap_ok = np.all(tracks["bob"].x - y >= rd.min_follow)
        if res["speed"] == 0 and res["accel"] == 0 and gap_ok:
            return y
    return x


def constraint_report(cfg, tracks, x, power, window, weight):
    rd, th = cfg.road, cfg.thresholds
    p_max = cfg.comm.tx_power_max
    v0 = tracks["alice"].v[0]
    res = kinematic_residuals(cfg, x, v0)
    spacing = float(max(np.max(rd.min_follow - (tracks["bob"].x - x)), 0.0))
    rep = {
        "power": {"ok": bool(np.all((power >= 0) & (power <= p_max))),
                  "residual": float(max(0.0, np.max(power) - p_max, -np.min(power)))},
        "speed": {"ok": res["speed"] <= 1e-9, "residual": res["speed"]},
        "accel": {"ok": res["accel"] <= 1e-9, "residual": res["accel"]},
        "spacing": {"ok": spacing <= 1e-9, "residual": spacing},
    }
    if cfg.comm.path_loss_exp == 4.0:
        on = [k for k in range(len(power)) if power[k] > 0]
        cops = [analytic.cop_closed_form(cfg, power[k], float(tracks["bob"].x[k] - x[k]))
                for k in on]
        sops = [analytic.sop_upper(cfg, power[k]) for k in on]
        srp = analytic.srp_closed_form(cfg)
        worst_rel = min((1.0 - c for c in cops), default=1.0)
        worst_sop = max(sops, default=0.0)
        rep["reliability"] = {"ok": worst_rel >= th.rel_min, "value": worst_rel}
        rep["secrecy"] = {"ok": worst_sop <= th.sec_max, "value": worst_sop}
        rep["sensing"] = {"ok": srp >= th.sen_min, "value": srp}
    return rep


def alternating_optimize(cfg, tracks, window, tol=1e-4, i_max=30, mode="per_slot", total=None,
                         baseline="proposed", seed=None, sca_tol=1e-7, sca_max_iter=30):
    if window is None or window.empty or window.k_end < window.k_start:
        raise OptimizerError("empty transmission window")
    if i_max < 1:
        raise OptimizerError("i_max must be at least 1")
    _check_alpha(cfg)
    k0, k1 = window.k_start, window.k_end
    slots = np.arange(k0, k1 + 1)
    N = cfg.road.num_slots
    terms = _receiver_terms(cfg, tracks, baseline)
    weight = _metric_weight(cfg)
    p_max = cfg.comm.tx_power_max
    p_cap = p_max
    if cfg.comm.path_loss_exp == 4.0 and cfg.thresholds.sec_max < 1.0:
        p_cap = analytic.sop_power_cap(cfg, p_max, cfg.thresholds.sec_max)

    x = tracks["alice"].x.astype(float).copy()
    if np.any(tracks["bob"].x - x < cfg.road.min_follow - 1e-9):
        raise OptimizerError("initial trajectory violates the following distance")
    if seed is not None:
        x = _jitter(cfg, tracks, x, k0, np.random.default_rng(seed))
    power = np.zeros(N + 1)
    if mode == "budget":
        if total is None:
            total = 0.5 * slots.size * p_cap
        power[slots] = min(p_cap, total / slots.size)
    else:
        power[slots] = p_cap
    prev = objective(cfg, tracks, x, power, weight, baseline, terms)
    run = OptRun(power.copy(), x.copy(), [], 0, False, {}, initial_objective=prev,
                 weight=weight, window=(k0, k1), mode=mode, baseline=baseline)
    for i in range(1, i_max + 1):
        cf = slot_coefficients(cfg, tracks, x, slots, baseline, terms)
        power = np.zeros(N + 1)
        power[slots] = power_step(cf, p_cap, mode, total)
        res = solve_trajectory(x, power, cfg, tracks, k0, sca_tol, sca_max_iter, baseline, terms)
        x = res.x
        obj = objective(cfg, tracks, x, power, weight, baseline, terms)
        run.objective_trace.append(obj)
        run.power_traces.append(power.copy())
        run.trajectory_traces.append(x.copy())
        run.kkt_residuals.append(res.kkt)
        run.iterations = i
        gain = obj - prev
        prev = obj
        if gain < tol:
            run.converged = True
            break
    run.power = power
    run.trajectory = x
    run.constraint_report = constraint_report(cfg, tracks, x, power, window, weight)
    return run
