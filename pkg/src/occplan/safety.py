"""Stopping-distance safety layer.

A plan carries a guarantee when, at every horizon step, the ego could still
brake to standstill before reaching the nearest occupancy intrusion into its
corridor. The braking model is a constant-deceleration point mass with zero
reaction time (configurable), so stopping distance is v^2 / (2 a).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from shapely.geometry import Polygon as _SP
from shapely.affinity import rotate as _rotate

from . import geometry as geo
from .prediction import OccupancySchedule
from .scene import EgoState

CORRIDOR_MARGIN = 0.2  # m added to the ego width when sweeping the corridor
DEFAULT_NO_INTRUSION_GAP = 80.0  # reported gap when nothing intrudes (sensor range)


@dataclass(frozen=True)
class SafetyVerdict:
    guaranteed: bool
    min_gap: float            # closest longitudinal gap bumper -> intrusion, m
    binding_step: int | None  # schedule step of the closest approach, 1-based
    required_speed: float     # fastest speed that would keep the guarantee
    envelope_clearance: float  # min_gap minus the stopping distance; > 0 iff guaranteed


def stopping_distance(v: float, a_dec: float, reaction_time: float = 0.0) -> float:
    """Distance to standstill from speed v under constant deceleration a_dec."""
    if v < 0:
        raise ValueError("speed must be non-negative")
    if a_dec <= 0:
        raise ValueError("deceleration must be positive")
    return v * reaction_time + v * v / (2.0 * a_dec)


def max_safe_speed(gap: float, a_dec: float) -> float:
    """Largest speed whose stopping distance fits inside the gap."""
    if gap < 0:
        raise ValueError("gap must be non-negative")
    if a_dec <= 0:
        raise ValueError("deceleration must be positive")
    return math.sqrt(2.0 * a_dec * gap)


def assess(ego: EgoState, schedule: OccupancySchedule,
           lane_direction: tuple[float, float] = (1.0, 0.0),
           no_intrusion_gap: float = DEFAULT_NO_INTRUSION_GAP) -> SafetyVerdict:
    """Stopping-distance verdict for an occupancy schedule.

    The gap at step k is measured along lane_direction from the ego front
    bumper to the nearest occupancy intrusion into the ego's swept corridor
    (ego width + 0.2 m margin). The guarantee holds when every step's gap
    exceeds the current stopping distance.
    """
    heading = math.atan2(lane_direction[1], lane_direction[0])
    ex, ey = ego.pose[0], ego.pose[1]
    half_corridor = 0.5 * (ego.width + CORRIDOR_MARGIN)
    front = 0.5 * ego.length

    min_gap = no_intrusion_gap
    binding = None
    for k in range(1, schedule.horizon_n + 1):
        gap_k = no_intrusion_gap
        for poly in schedule.at(k):
            sp = _SP(poly.vertices)
            if abs(heading) > 1e-12:
                sp = _rotate(sp, -heading, origin=(ex, ey), use_radians=True)
            lo_x, lo_y, hi_x, hi_y = sp.bounds
            if hi_y <= ey - half_corridor or lo_y >= ey + half_corridor:
                continue
            corridor = _SP([
                (ex + front, ey - half_corridor),
                (ex + front + no_intrusion_gap, ey - half_corridor),
                (ex + front + no_intrusion_gap, ey + half_corridor),
                (ex + front, ey + half_corridor),
            ])
            hit = sp.intersection(corridor)
            if hit.is_empty or hit.area < geo.AREA_EPS:
                continue
            gap_k = min(gap_k, hit.bounds[0] - (ex + front))
        if gap_k < min_gap:
            min_gap = gap_k
            binding = k
    min_gap = max(0.0, min_gap)

    d_stop = stopping_distance(ego.speed, ego.max_decel)
    guaranteed = min_gap > d_stop
    return SafetyVerdict(
        guaranteed=guaranteed,
        min_gap=min_gap,
        binding_step=None if guaranteed else binding,
        required_speed=max_safe_speed(min_gap, ego.max_decel),
        envelope_clearance=min_gap - d_stop,
    )
