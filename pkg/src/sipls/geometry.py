"""Road-frame kinematics and radar-cone coverage predicates.

Road frame: x along the road, y across it. Alice, Bob and Eve drive toward
+x; Carol drives toward -x in the opposing lane and its radar looks along
its own heading.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "VehicleTrack", "RelativeOffset", "KinematicsError",
    "relative_offset", "in_sensing_cone", "bob_clear_of_cone",
    "indicator_sets", "advance", "constant_speed_track", "initial_tracks",
    "track_from_positions", "HEADING",
]

HEADING = {"alice": 1, "bob": 1, "eve": 1, "carol": -1}


class KinematicsError(ValueError):
    pass


@dataclass(frozen=True)
class VehicleTrack:
    """Kinematic state at slots k = 0..N (N + 1 samples, slot k at t = k dt)."""
    role: str
    x: np.ndarray
    y: float
    v: np.ndarray
    a: np.ndarray
    heading: int
    dt: float

    @property
    def num_slots(self):
        return len(self.x) - 1

    def position(self, t):
        """Position at continuous time t, t in [0, N dt], piecewise constant speed."""
        n = self.num_slots
        k = min(max(int(math.floor(t / self.dt)), 0), n)
        return self.x[k] + self.heading * self.v[k] * (t - k * self.dt)


@dataclass(frozen=True)
class RelativeOffset:
    dx: float   # along Carol's forward direction
    dy: float   # lateral, >= 0


def relative_offset(carol_xy, subject_xy, heading=-1):
    """Offset of ``subject`` seen from a Carol at ``carol_xy`` facing ``heading``."""
    dx = heading * (subject_xy[0] - carol_xy[0])
    dy = abs(subject_xy[1] - carol_xy[1])
    return RelativeOffset(float(dx), float(dy))


def in_sensing_cone(off, r):
    """True iff the offset lies in the closed forward cone of half-angle theta/2, range R_max."""
    dx, dy = off.dx, off.dy
    rmax = r.max_range
    if dy >= rmax:
        return False
    near = dy / math.tan(r.cone_half_angle)
    far = math.sqrt(rmax * rmax - dy * dy)
    return near <= dx <= far


def bob_clear_of_cone(off, r):
    return not in_sensing_cone(off, r)


def indicator_sets(tracks, carols, k, r):
    """(M, H, F): indices of Carols whose cone covers Bob, Eve and Alice at slot k.

    ``carols`` is a list of (x, y) positions (all facing -x).
    """
    pos = {role: (tracks[role].x[k], tracks[role].y) for role in ("alice", "bob", "eve")
           if role in tracks}
    sets = {}
    for role in ("bob", "eve", "alice"):
        if role not in pos:
            sets[role] = set()
            continue
        sets[role] = {i for i, c in enumerate(carols)
                      if in_sensing_cone(relative_offset(c, pos[role]), r)}
    return sets["bob"], sets["eve"], sets["alice"]


def advance(track, k, accel, a_max, v_max):
    """Apply ``accel`` during slot k: updates v[k+1] and x[k+1]."""
    if abs(accel) > a_max:
        raise KinematicsError(f"acceleration {accel} exceeds a_max={a_max}")
    if not 0 <= k < track.num_slots:
        raise KinematicsError(f"slot {k} out of range")
    x = track.x.copy()
    v = track.v.copy()
    a = track.a.copy()
    v[k + 1] = min(max(v[k] + accel * track.dt, -v_max), v_max)
    x[k + 1] = x[k] + track.heading * v[k] * track.dt
    a[k] = (v[k + 1] - v[k]) / track.dt
    return VehicleTrack(track.role, x, track.y, v, a, track.heading, track.dt)


def constant_speed_track(role, x0, y, speed, num_slots, dt):
    h = HEADING[role]
    k = np.arange(num_slots + 1)
    x = x0 + h * speed * dt * k
    v = np.full(num_slots + 1, float(speed))
    return VehicleTrack(role, x, float(y), v, np.zeros(num_slots + 1), h, dt)


def track_from_positions(role, x, y, dt, v_last=None):
    """Track whose slot speeds are the forward differences of ``x``."""
    x = np.asarray(x, dtype=float)
    h = HEADING[role]
    v = np.empty_like(x)
    v[:-1] = h * np.diff(x) / dt
    if v_last is not None:
        v[-1] = v_last
    else:
        v[-1] = v[-2] if len(x) > 1 else 0.0
    a = np.zeros_like(x)
    a[:-1] = np.diff(v) / dt
    return VehicleTrack(role, x, float(y), v, a, h, dt)


def initial_tracks(cfg):
    """Constant-speed tracks for all four roles from the scenario's initial state."""
    n, dt = cfg.road.num_slots, cfg.road.dt
    return {role: constant_speed_track(role, cfg.initial_positions[role][0], cfg.lane_y(role),
                                       cfg.initial_speed, n, dt)
            for role in ("alice", "bob", "eve", "carol")}
