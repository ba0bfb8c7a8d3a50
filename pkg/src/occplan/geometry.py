"""2D polygon kernel: containment, clipping, and sensor shadow casting.

All polygons are simple, counter-clockwise, with positive signed area.
Set operations (intersection, union) are delegated to shapely; the shadow
construction itself is computed analytically by projecting the occluder
silhouette radially to the sensor range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from shapely.geometry import MultiPolygon, Point as _ShapelyPoint, Polygon as _ShapelyPolygon
from shapely.ops import unary_union

# Polygons with less area than this are numerical noise and get dropped.
AREA_EPS = 1e-9

# Maximum sagitta of the chord approximation of range arcs, in meters.
ARC_CHORD_TOL = 0.05


class GeometryError(ValueError):
    """Invalid geometric input (malformed polygon, origin inside occluder, ...)."""


@dataclass(frozen=True)
class Point2:
    """A point in the road frame, meters."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"non-finite point ({self.x}, {self.y})")

    def dist(self, other: "Point2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Polygon:
    """Simple CCW polygon with positive area.

    Vertices are stored as a tuple of (x, y) pairs without a repeated
    closing vertex.
    """

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.vertices) < 3:
            raise GeometryError("polygon needs at least 3 vertices")
        for x, y in self.vertices:
            if not (math.isfinite(x) and math.isfinite(y)):
                raise GeometryError("non-finite polygon vertex")
        if signed_area(self.vertices) <= 0:
            raise GeometryError("polygon must be counter-clockwise with positive area")
        if not _ShapelyPolygon(self.vertices).is_valid:
            raise GeometryError("polygon must be simple (non-self-intersecting)")

    @property
    def area(self) -> float:
        return signed_area(self.vertices)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)


def signed_area(vertices) -> float:
    """Shoelace signed area; positive for CCW."""
    a = 0.0
    n = len(vertices)
    for i in range(n):
        x0, y0 = vertices[i]
        x1, y1 = vertices[(i + 1) % n]
        a += x0 * y1 - x1 * y0
    return 0.5 * a


def make_polygon(vertices) -> Polygon:
    """Build a Polygon from any vertex order, reversing to CCW if needed."""
    verts = [(float(x), float(y)) for x, y in vertices]
    if signed_area(verts) < 0:
        verts.reverse()
    return Polygon(tuple(verts))


def rect(x0: float, y0: float, x1: float, y1: float) -> Polygon:
    """Axis-aligned rectangle spanning [x0, x1] x [y0, y1]."""
    return Polygon(((x0, y0), (x1, y0), (x1, y1), (x0, y1)))


# -- shapely bridge ----------------------------------------------------------

def to_shapely(poly: Polygon) -> _ShapelyPolygon:
    return _ShapelyPolygon(poly.vertices)


def from_shapely(geom) -> list[Polygon]:
    """Extract the polygonal parts of a shapely geometry, dropping slivers."""
    out: list[Polygon] = []
    if geom.is_empty:
        return out
    if isinstance(geom, _ShapelyPolygon):
        parts = [geom]
    elif isinstance(geom, MultiPolygon):
        parts = list(geom.geoms)
    else:  # GeometryCollection from degenerate intersections
        parts = [g for g in getattr(geom, "geoms", []) if isinstance(g, _ShapelyPolygon)]
    for part in parts:
        if part.area < AREA_EPS:
            continue
        shell = list(part.exterior.coords)[:-1]
        if signed_area(shell) < 0:
            shell.reverse()
        out.append(Polygon(tuple((float(x), float(y)) for x, y in shell)))
    return out


def intersect(a: Polygon, b: Polygon) -> list[Polygon]:
    """a ∩ b as a list of simple CCW polygons (no convexity requirement)."""
    return from_shapely(to_shapely(a).intersection(to_shapely(b)))


def intersect_many(polys: list[Polygon], window_union) -> list[Polygon]:
    """Intersect each polygon with a shapely geometry, merging results."""
    pieces = [to_shapely(p).intersection(window_union) for p in polys]
    return from_shapely(unary_union(pieces))


def union(polys: list[Polygon]) -> list[Polygon]:
    """Union of polygons, merged where overlapping."""
    if not polys:
        return []
    return from_shapely(unary_union([to_shapely(p) for p in polys]))


def union_area(polys: list[Polygon]) -> float:
    if not polys:
        return 0.0
    return unary_union([to_shapely(p) for p in polys]).area


# -- spec operations ---------------------------------------------------------

def contains(poly: Polygon, p: Point2) -> bool:
    """Point-in-polygon test; boundary points count as inside."""
    return to_shapely(poly).intersects(_ShapelyPoint(p.x, p.y))


def is_convex(poly: Polygon) -> bool:
    verts = poly.vertices
    n = len(verts)
    for i in range(n):
        ax, ay = verts[i]
        bx, by = verts[(i + 1) % n]
        cx, cy = verts[(i + 2) % n]
        cross = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        if cross < -AREA_EPS:
            return False
    return True


def clip(subject: Polygon, window: Polygon) -> list[Polygon]:
    """Clip subject to a convex window; the result pieces union to subject ∩ window."""
    if not is_convex(window):
        raise GeometryError("clip window must be convex")
    return intersect(subject, window)


def _angle_span(angles: np.ndarray) -> tuple[float, float]:
    """Smallest angular interval covering all angles, as (start, width)."""
    order = np.sort(angles)
    gaps = np.diff(np.concatenate([order, order[:1] + 2 * math.pi]))
    k = int(np.argmax(gaps))
    start = order[(k + 1) % len(order)]
    width = 2 * math.pi - gaps[k]
    return float(start), float(width)


def occlusion_shadow(origin: Point2, occluder: Polygon, max_range: float) -> Polygon | None:
    """Region hidden behind an occluder, out to max_range from the origin.

    A point q is shadowed when the sight segment origin->q passes through the
    occluder interior; the occluder interior itself is part of the shadow.
    Constructed by projecting the visible silhouette chain radially to the
    range arc; the arc is replaced by an outer chord approximation so the
    polygon conservatively covers the true shadow out to max_range (vertices
    stay within max_range + ARC_CHORD_TOL of the origin).

    Returns None when the occluder lies entirely beyond max_range. Occluders
    subtending an angle >= pi as seen from the origin are not supported.
    """
    if max_range <= 0:
        raise GeometryError("max_range must be positive")
    sp_occ = to_shapely(occluder)
    if sp_occ.intersects(_ShapelyPoint(origin.x, origin.y)):
        raise GeometryError("shadow origin lies inside or on the occluder")

    verts = occluder.as_array()
    rel = verts - np.array([origin.x, origin.y])
    dists = np.hypot(rel[:, 0], rel[:, 1])
    if np.min(dists) >= max_range:
        return None

    angles = np.arctan2(rel[:, 1], rel[:, 0])
    start, width = _angle_span(angles)
    if width >= math.pi - 1e-12:
        raise GeometryError("occluder subtends >= pi from the origin; split it first")

    # Near-silhouette envelope: at every vertex direction, the closest hit of
    # the ray with the occluder boundary. Between consecutive directions the
    # envelope follows a single edge, so these points connect it exactly.
    rel_angles = np.mod(angles - start, 2 * math.pi)
    order = np.argsort(rel_angles, kind="stable")
    chain: list[tuple[float, float, float]] = []  # (relative angle, distance, is_hit)
    for idx in order:
        theta = start + rel_angles[idx]
        hit = _nearest_ray_hit(origin, theta, verts)
        if hit is None:
            continue
        if chain and abs(chain[-1][0] - rel_angles[idx]) < 1e-12:
            if hit < chain[-1][1]:
                chain[-1] = (rel_angles[idx], hit, theta)
            continue
        chain.append((rel_angles[idx], hit, theta))
    if len(chain) < 2:
        return None

    # Outer chord approximation of the range arc: vertices pushed to
    # max_range / cos(step/2) so every true shadow point within range is
    # covered, while staying inside max_range + ARC_CHORD_TOL.
    n_arc = max(2, int(math.ceil(width / (2 * math.acos(max_range / (max_range + ARC_CHORD_TOL))))) + 1)
    arc_angles = np.linspace(start, start + width, n_arc)
    half_step = 0.5 * width / (n_arc - 1)
    r_outer = max_range / math.cos(half_step)

    pts: list[tuple[float, float]] = []
    for _, dist, theta in chain:
        pts.append((origin.x + dist * math.cos(theta), origin.y + dist * math.sin(theta)))
    for theta in arc_angles[::-1]:
        pts.append((origin.x + r_outer * math.cos(theta), origin.y + r_outer * math.sin(theta)))

    raw = _ShapelyPolygon(pts)
    if not raw.is_valid:
        raw = raw.buffer(0)
    parts = from_shapely(raw)
    if not parts:
        return None
    # A single wedge by construction; keep the dominant part if cleanup split it.
    return max(parts, key=lambda p: p.area)


def _nearest_ray_hit(origin: Point2, theta: float, verts: np.ndarray) -> float | None:
    """Distance along the ray from origin at angle theta to the closest
    boundary crossing of the polygon, or None if the ray misses it."""
    dx, dy = math.cos(theta), math.sin(theta)
    ox, oy = origin.x, origin.y
    best = None
    n = len(verts)
    for i in range(n):
        ax, ay = verts[i]
        bx, by = verts[(i + 1) % n]
        ex, ey = bx - ax, by - ay
        denom = dx * ey - dy * ex
        if abs(denom) < 1e-15:
            continue
        t = ((ax - ox) * ey - (ay - oy) * ex) / denom
        s = ((ax - ox) * dy - (ay - oy) * dx) / denom
        if t >= 0 and -1e-12 <= s <= 1 + 1e-12:
            if best is None or t < best:
                best = t
    return best


def grow_polygon(poly: Polygon, r: float, n_sides: int = 16) -> Polygon:
    """Minkowski sum of a polygon with an outer approximation of a disc.

    The disc is replaced by a circumscribed regular n_sides-gon oriented with
    edge midpoints on the axes, so the grown region contains the true
    disc-sum and its extent along x and y is exactly r beyond the polygon.
    """
    if r < 0:
        raise GeometryError("growth radius must be non-negative")
    if r == 0:
        return poly
    half = math.pi / n_sides
    rv = r / math.cos(half)
    disc = [(rv * math.cos(half + 2 * half * i), rv * math.sin(half + 2 * half * i))
            for i in range(n_sides)]
    pieces = [to_shapely(poly)]
    verts = poly.vertices
    n = len(verts)
    for i in range(n):
        ax, ay = verts[i]
        bx, by = verts[(i + 1) % n]
        cloud = [(ax + dx, ay + dy) for dx, dy in disc] + [(bx + dx, by + dy) for dx, dy in disc]
        pieces.append(_ShapelyPolygon(cloud).convex_hull)
    merged = unary_union(pieces)
    parts = from_shapely(merged)
    if len(parts) != 1:
        # The sum of a connected region with a disc is connected.
        parts = from_shapely(merged.buffer(0))
    return max(parts, key=lambda p: p.area)


def sector(origin: Point2, heading: float, fov: float, radius: float) -> Polygon:
    """Field-of-view sector as an outer chord-approximated polygon.

    fov is the full opening angle; 2*pi yields a full disc polygon.
    """
    if radius <= 0 or not (0 < fov <= 2 * math.pi + 1e-12):
        raise GeometryError("sector needs radius > 0 and 0 < fov <= 2*pi")
    full = fov >= 2 * math.pi - 1e-12
    n_arc = max(3, int(math.ceil(fov / (2 * math.acos(radius / (radius + ARC_CHORD_TOL))))) + 1)
    half_step = 0.5 * fov / (n_arc - 1)
    r_outer = radius / math.cos(half_step)
    thetas = np.linspace(heading - fov / 2, heading + fov / 2, n_arc)
    pts = [(origin.x + r_outer * math.cos(t), origin.y + r_outer * math.sin(t)) for t in thetas]
    if full:
        pts = pts[:-1]  # closing vertex would duplicate the first
    else:
        pts.insert(0, (origin.x, origin.y))
    return make_polygon(pts)
