"""Transmission window: slots in which Alice's signal reaches Eve while Eve
is inside the oncoming Carol's sensing cone.

Carol's radar illuminates Eve from the far cone edge (longitudinal gap
sqrt(R_max^2 - dy^2)) down to the near edge (gap dy / tan(theta/2)). The
gap is measured between Carol at emission and Eve at arrival, so each edge
is a linear equation in the Carol emission time once the flight time is
known. Eve arrival instants are then mapped back to Alice emission instants
with the delay quadratic and quantized inward to whole slots.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

__all__ = ["TxWindow", "WindowError", "propagation_delay", "emission_time",
           "compute_window"]


class WindowError(ValueError):
    pass


@dataclass(frozen=True)
class TxWindow:
    k_start: int
    k_end: int
    t_carol_first: float
    t_carol_last: float
    t_eve_first: float
    t_eve_last: float
    t_alice_first: float
    t_alice_last: float
    empty: bool

    def to_dict(self):
        return asdict(self)

    @property
    def slots(self):
        return range(self.k_start, self.k_end + 1) if not self.empty else range(0)


def _delay_root(dx, dy, u, c):
    """Positive root tau of (dx + u tau)^2 + dy^2 = (c tau)^2."""
    A = c * c - u * u
    if A <= 0:
        raise WindowError("propagation speed must exceed receiver speed")
    d2 = dx * dx + dy * dy
    if d2 == 0.0:
        raise WindowError("transmitter and receiver coincide")
    B = u * dx
    disc = math.sqrt(B * B + A * d2)
    return (B + disc) / A if B >= 0 else d2 / (disc - B)


def propagation_delay(tx_pos, rx_track, t_emit, c):
    """Flight time from ``tx_pos`` (emitted at ``t_emit``) to a receiver on ``rx_track``."""
    k = min(max(int(math.floor(t_emit / rx_track.dt)), 0), rx_track.num_slots)
    u = float(rx_track.heading * rx_track.v[k])
    dx = float(rx_track.position(t_emit) - tx_pos[0])
    dy = float(rx_track.y - tx_pos[1])
    return _delay_root(dx, dy, u, c)


def emission_time(tx_track, rx_x, rx_y, t_arrive, c):
    """Time at which a transmitter on ``tx_track`` (constant speed) must emit to reach
    (rx_x, rx_y) at ``t_arrive``."""
    u = float(tx_track.heading * tx_track.v[0])
    # tx at t_arrive - s is x(t_arrive) - u s; gap grows as (x_r - x(t_arrive)) + u s
    x_at = float(tx_track.x[0]) + u * t_arrive
    s = _delay_root(rx_x - x_at, rx_y - tx_track.y, u, c)
    return t_arrive - s


def _empty(tc0=math.nan, tc1=math.nan, te0=math.nan, te1=math.nan, ta0=math.nan, ta1=math.nan):
    return TxWindow(0, -1, tc0, tc1, te0, te1, ta0, ta1, True)


def compute_window(cfg, tracks):
    r = cfg.radar
    c = cfg.comm.propagation_speed
    n, dt = cfg.road.num_slots, cfg.road.dt
    carol, eve, alice = tracks["carol"], tracks["eve"], tracks["alice"]
    vc = float(carol.v[0])        # speed toward -x
    ve = float(eve.heading * eve.v[0])
    closing = vc + ve
    dy = abs(carol.y - eve.y)
    if dy >= r.max_range:
        return _empty()
    x_far = math.sqrt(r.max_range ** 2 - dy * dy)
    x_near = dy / math.tan(r.cone_half_angle)
    gap0 = float(carol.x[0] - eve.x[0])
    if gap0 < x_near or closing <= 0:
        return _empty()

    def carol_time(x_edge):
        # Carol at emission t and Eve at t + tau are x_edge apart; range is fixed by x_edge
        tau = math.hypot(x_edge, dy) / c
        t = (gap0 - x_edge - ve * tau) / closing
        return t, t + tau

    tc0, te0 = carol_time(x_far)
    tc1, te1 = carol_time(x_near)
    ta0 = emission_time(alice, float(eve.x[0]) + ve * te0, eve.y, te0, c)
    ta1 = emission_time(alice, float(eve.x[0]) + ve * te1, eve.y, te1, c)
    k0 = max(1, math.ceil(ta0 / dt))
    k1 = min(n, math.floor(ta1 / dt))
    if k0 > k1:
        return _empty(tc0, tc1, te0, te1, ta0, ta1)
    return TxWindow(k0, k1, tc0, tc1, te0, te1, ta0, ta1, False)
