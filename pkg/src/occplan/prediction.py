"""Worst-case occupancy prediction over the planning horizon.

Hidden objects may emerge from occluded space in any direction, so occluded
regions grow isotropically by the kinematic bound v0*t + a_wc*t^2/2.
Perceived objects grow anisotropically: a worst-case longitudinal interval
along their heading plus a small lateral-uncertainty rate. All growth uses
outer polygon approximations and is clipped to road space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from shapely.geometry import MultiPoint

from . import geometry as geo
from .geometry import Polygon
from .scene import DynamicObject, Scene, compute_occlusions

DEFAULT_LATERAL_RATE = 0.2  # m/s, lateral spread of perceived-object occupancy


@dataclass(frozen=True)
class HiddenObjectParams:
    """Kinematic bounds assumed for objects hidden in occluded space."""

    v0: float
    a_wc: float

    def __post_init__(self):
        if self.v0 < 0 or self.a_wc < 0:
            raise ValueError("hidden-object bounds must be non-negative")


@dataclass(frozen=True)
class OccupancySchedule:
    """Per-step sets of possibly occupied polygons, k = 1..N at times k*dt."""

    dt: float
    steps: tuple[tuple[Polygon, ...], ...]

    def __post_init__(self):
        if self.dt <= 0 or not self.steps:
            raise ValueError("schedule needs dt > 0 and at least one step")

    @property
    def horizon_n(self) -> int:
        return len(self.steps)

    def at(self, k: int) -> tuple[Polygon, ...]:
        """Occupancy for step k >= 1, saturating at the last predicted step."""
        if k < 1:
            raise IndexError("occupancy steps start at k = 1")
        return self.steps[min(k, len(self.steps)) - 1]


def reachable_radius(v0: float, a_wc: float, t: float) -> float:
    """Distance bound reachable in time t from speed v0 under a_wc."""
    if t < 0:
        raise ValueError("time must be non-negative")
    return v0 * t + 0.5 * a_wc * t * t


def grow_region(region: Polygon, r: float) -> Polygon:
    """Isotropic worst-case growth: Minkowski sum with an outer 16-gon disc."""
    return geo.grow_polygon(region, r, n_sides=16)


def object_occupancy(obj: DynamicObject, t: float,
                     lateral_rate: float = DEFAULT_LATERAL_RATE) -> Polygon:
    """Worst-case footprint of a perceived object after time t, unclipped.

    The footprint sweeps the longitudinal interval [0, v*t + a_max*t^2/2]
    along the heading and spreads laterally by lateral_rate*t to each side.
    Exact for convex footprints (hull of the four extreme translates).
    """
    length = reachable_radius(obj.speed, obj.max_accel, t)
    w = lateral_rate * t
    h = obj.pose[2]
    ux, uy = math.cos(h), math.sin(h)
    px, py = -uy, ux
    footprint = obj.world_footprint()
    if length == 0.0 and w == 0.0:
        return footprint
    # Minkowski sum with the heading-frame rectangle [0, length] x [-w, w]:
    # for a convex footprint this is the hull of its four extreme translates.
    offsets = [(dl * ux + dw * px, dl * uy + dw * py)
               for dl in (0.0, length) for dw in (-w, w)]
    cloud = [(x + dx, y + dy) for dx, dy in offsets for x, y in footprint.vertices]
    hull = geo.to_shapely(footprint).union(MultiPoint(cloud).convex_hull).convex_hull
    return geo.from_shapely(hull)[0]


def hidden_occupancy(occlusions: list[Polygon], params: HiddenObjectParams,
                     t: float) -> list[Polygon]:
    """Grown occluded regions at time t, unclipped."""
    r = reachable_radius(params.v0, params.a_wc, t)
    if r == 0.0:
        return list(occlusions)
    return [grow_region(p, r) for p in occlusions]


def occupancy_schedule(scene: Scene, hidden: HiddenObjectParams,
                       horizon_n: int, dt: float,
                       lateral_rate: float = DEFAULT_LATERAL_RATE,
                       occlusions: list[Polygon] | None = None) -> OccupancySchedule:
    """Worst-case occupancy for each horizon step k = 1..horizon_n.

    Hidden-object occupancy is clipped to drivable + walkable space;
    perceived-object occupancy to drivable space only. Precomputed occlusions
    may be passed in to avoid recomputing them per planning cycle.
    """
    if horizon_n < 1:
        raise ValueError("horizon must contain at least one step")
    if dt <= 0:
        raise ValueError("dt must be positive")
    if occlusions is None:
        occlusions = compute_occlusions(scene)
    road = scene.road_space()
    drivable = scene.drivable_space()
    steps = []
    for k in range(1, horizon_n + 1):
        t = k * dt
        polys = geo.intersect_many(hidden_occupancy(occlusions, hidden, t), road)
        for obj in scene.dynamics:
            polys += geo.intersect_many([object_occupancy(obj, t, lateral_rate)], drivable)
        steps.append(tuple(polys))
    return OccupancySchedule(dt=dt, steps=tuple(steps))
