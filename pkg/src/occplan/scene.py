"""World model: straight multi-lane road, objects, ego, sensor.

The road frame has x along the road and y lateral. A Scene is an immutable
snapshot; occlusions and free space are derived by pure functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from shapely.ops import unary_union

from . import geometry as geo
from .geometry import Point2, Polygon


class MarkingKind(str, Enum):
    SOLID = "solid"
    DASHED = "dashed"
    ROAD_EDGE = "road_edge"


class ObjectKind(str, Enum):
    VEHICLE = "vehicle"
    PEDESTRIAN = "pedestrian"


@dataclass(frozen=True)
class LaneMarking:
    lateral_offset: float
    kind: MarkingKind


@dataclass(frozen=True)
class RoadModel:
    markings: tuple[LaneMarking, ...]
    drivable_band: tuple[float, float]
    walkable_bands: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        lo, hi = self.drivable_band
        if not lo < hi:
            raise ValueError("drivable band must be a non-empty [y_min, y_max]")
        offsets = [m.lateral_offset for m in self.markings]
        if sorted(offsets) != offsets or len(set(offsets)) != len(offsets):
            raise ValueError("marking offsets must be strictly increasing")
        for wlo, whi in self.walkable_bands:
            if not wlo < whi:
                raise ValueError("walkable band must be non-empty")
            if wlo < hi and whi > lo:
                raise ValueError("walkable bands must not overlap the drivable band")

    def lane_centers(self) -> list[float]:
        """Centers of the bands between consecutive markings inside the road."""
        ys = [m.lateral_offset for m in self.markings]
        return [0.5 * (a + b) for a, b in zip(ys, ys[1:])]


@dataclass(frozen=True)
class DynamicObject:
    pose: tuple[float, float, float]  # x, y, heading
    footprint: Polygon  # body frame, CCW
    speed: float
    max_accel: float
    kind: ObjectKind

    def __post_init__(self):
        if self.speed < 0 or self.max_accel < 0:
            raise ValueError("speed and max_accel must be non-negative")

    def world_footprint(self) -> Polygon:
        x, y, h = self.pose
        c, s = math.cos(h), math.sin(h)
        pts = [(x + c * px - s * py, y + s * px + c * py) for px, py in self.footprint.vertices]
        return geo.make_polygon(pts)


@dataclass(frozen=True)
class EgoState:
    pose: tuple[float, float, float]
    speed: float
    max_decel: float
    width: float = 2.0
    length: float = 4.765

    def __post_init__(self):
        if self.speed < 0:
            raise ValueError("ego speed must be non-negative")
        if self.max_decel <= 0:
            raise ValueError("ego max_decel must be positive")

    @property
    def front_x(self) -> float:
        return self.pose[0] + 0.5 * self.length

    def footprint(self) -> Polygon:
        x, y, h = self.pose
        c, s = math.cos(h), math.sin(h)
        hl, hw = 0.5 * self.length, 0.5 * self.width
        pts = [(x + c * px - s * py, y + s * px + c * py)
               for px, py in ((-hl, -hw), (hl, -hw), (hl, hw), (-hl, hw))]
        return geo.make_polygon(pts)


@dataclass(frozen=True)
class SensorSpec:
    mount_offset: Point2 = Point2(0.0, 0.0)
    max_range: float = 80.0
    fov: float = 2.0 * math.pi

    def __post_init__(self):
        if self.max_range <= 0:
            raise ValueError("sensor range must be positive")
        if not (0 < self.fov <= 2 * math.pi + 1e-12):
            raise ValueError("fov must be in (0, 2*pi]")

    def origin(self, ego: EgoState) -> Point2:
        x, y, h = ego.pose
        c, s = math.cos(h), math.sin(h)
        return Point2(x + c * self.mount_offset.x - s * self.mount_offset.y,
                      y + s * self.mount_offset.x + c * self.mount_offset.y)


@dataclass(frozen=True)
class Scene:
    road: RoadModel
    ego: EgoState
    statics: tuple[Polygon, ...] = ()
    dynamics: tuple[DynamicObject, ...] = ()
    sensor: SensorSpec = field(default_factory=SensorSpec)

    def __post_init__(self):
        ego_fp = geo.to_shapely(self.ego.footprint())
        for s in self.statics:
            if ego_fp.intersection(geo.to_shapely(s)).area > geo.AREA_EPS:
                raise ValueError("ego footprint overlaps a static object")

    def occluder_footprints(self) -> list[Polygon]:
        return list(self.statics) + [d.world_footprint() for d in self.dynamics]

    def x_extent(self) -> tuple[float, float]:
        """Road-frame x window covering everything within sensor reach."""
        reach = self.sensor.max_range + 2 * geo.ARC_CHORD_TOL + 1.0
        return self.ego.pose[0] - reach, self.ego.pose[0] + reach

    def road_space(self):
        """Drivable plus walkable bands over the scene extent, as shapely."""
        x0, x1 = self.x_extent()
        lo, hi = self.road.drivable_band
        bands = [geo.rect(x0, lo, x1, hi)]
        bands += [geo.rect(x0, a, x1, b) for a, b in self.road.walkable_bands]
        return unary_union([geo.to_shapely(b) for b in bands])

    def drivable_space(self):
        x0, x1 = self.x_extent()
        lo, hi = self.road.drivable_band
        return geo.to_shapely(geo.rect(x0, lo, x1, hi))


def compute_occlusions(scene: Scene) -> list[Polygon]:
    """Occluded space: shadow of every object, clipped to the sensor's FOV
    sector and to drivable + walkable space, minus the object footprints, with
    overlapping shadows merged."""
    origin = scene.sensor.origin(scene.ego)
    heading = scene.ego.pose[2]
    occluders = scene.occluder_footprints()
    shadows = []
    for occ in occluders:
        shadow = geo.occlusion_shadow(origin, occ, scene.sensor.max_range)
        if shadow is not None:
            shadows.append(shadow)
    if not shadows:
        return []
    fov_sector = geo.to_shapely(
        geo.sector(origin, heading, scene.sensor.fov, scene.sensor.max_range))
    window = scene.road_space().intersection(fov_sector)
    merged = unary_union([geo.to_shapely(s) for s in shadows]).intersection(window)
    bodies = unary_union([geo.to_shapely(o) for o in occluders])
    return geo.from_shapely(merged.difference(bodies))


def free_space(scene: Scene) -> list[Polygon]:
    """Drivable band minus static footprints inflated by the ego half-width.

    Returns one polygon per connected component; a fully blocked road yields
    two components, which the planner later reports as infeasible.
    """
    drivable = scene.drivable_space()
    inflation = 0.5 * scene.ego.width
    blocked = [geo.grow_polygon(s, inflation) for s in scene.statics]
    if blocked:
        drivable = drivable.difference(unary_union([geo.to_shapely(b) for b in blocked]))
    return geo.from_shapely(drivable)
