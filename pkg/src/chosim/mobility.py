"""Random-waypoint motion at constant speed inside the deployment bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class MotionState:
    pos: np.ndarray
    speed: float
    waypoint: np.ndarray


def step_motion(state: MotionState, dt: float, bounds, rng: np.random.Generator) -> MotionState:
    """Advance by ``speed * dt`` along the waypoint path.

    Distance left over after reaching a waypoint is spent toward a freshly
    drawn one (no pause). ``bounds`` must offer ``sample_point(rng)``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    px, py = float(state.pos[0]), float(state.pos[1])
    wx, wy = float(state.waypoint[0]), float(state.waypoint[1])
    left = state.speed * dt
    while True:
        dx, dy = wx - px, wy - py
        dist = math.sqrt(dx * dx + dy * dy)
        if dist > left:
            px += dx / dist * left
            py += dy / dist * left
            break
        px, py = wx, wy
        left -= dist
        wx, wy = (float(v) for v in bounds.sample_point(rng))
        if left <= 0.0:
            break
    return MotionState(np.array([px, py]), state.speed, np.array([wx, wy]))


def spawn_ues(n: int, bounds, speed: float, rngs) -> list[MotionState]:
    """``n`` UEs with uniform start points and first waypoints; ``rngs[i]`` drives UE i."""
    if n < 0:
        raise ValueError("n must be >= 0")
    out = []
    for i in range(n):
        pos = bounds.sample_point(rngs[i])
        wp = bounds.sample_point(rngs[i])
        out.append(MotionState(pos, float(speed), wp))
    return out


class Fleet:
    """Vectorized container of all UE motion states of one run.

    The straight-line case is advanced in bulk; UEs reaching a waypoint go
    through :func:`step_motion` one by one. Both paths use the same float
    operations, so results do not depend on which path a UE took.
    """

    def __init__(self, states: list[MotionState], bounds, rngs):
        self.bounds = bounds
        self.rngs = rngs
        n = len(states)
        self.pos = np.array([s.pos for s in states], dtype=np.float64).reshape(n, 2)
        self.waypoint = np.array([s.waypoint for s in states], dtype=np.float64).reshape(n, 2)
        self.speed = np.array([s.speed for s in states], dtype=np.float64)

    def __len__(self):
        return len(self.speed)

    def state(self, i: int) -> MotionState:
        return MotionState(self.pos[i].copy(), float(self.speed[i]), self.waypoint[i].copy())

    def step(self, dt: float) -> None:
        if len(self) == 0:
            return
        left = self.speed * dt
        d = self.waypoint - self.pos
        dist = np.sqrt(d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1])
        straight = dist > left
        safe = np.where(straight, dist, 1.0)
        self.pos[straight] += (d / safe[:, None] * left[:, None])[straight]
        for i in np.flatnonzero(~straight):
            s = step_motion(self.state(i), dt, self.bounds, self.rngs[i])
            self.pos[i] = s.pos
            self.waypoint[i] = s.waypoint
