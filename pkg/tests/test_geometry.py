import math

import numpy as np
import pytest

from occplan import geometry as geo
from occplan.geometry import Point2, Polygon, clip, contains, occlusion_shadow


UNIT_SQUARE = geo.rect(0.0, 0.0, 1.0, 1.0)


def segment_hits_interior(origin, q, poly: Polygon) -> bool:
    """Ray-cast oracle: does the segment origin->q cross the polygon interior?

    Exact: intersect the segment with every edge, then midpoint-test the
    resulting parameter intervals. Independent of the shadow construction.
    """
    ox, oy = origin
    qx, qy = q
    dx, dy = qx - ox, qy - oy
    verts = poly.as_array()
    ts = [0.0, 1.0]
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
        if 0.0 <= t <= 1.0 and 0.0 <= s <= 1.0:
            ts.append(t)
    ts.sort()
    for t0, t1 in zip(ts, ts[1:]):
        if t1 - t0 < 1e-12:
            continue
        tm = 0.5 * (t0 + t1)
        if contains(poly, Point2(ox + tm * dx, oy + tm * dy)):
            # contains() includes the boundary; require a real interior chord.
            if (t1 - t0) * math.hypot(dx, dy) > 1e-9:
                return True
    return False


class TestPolygonType:
    def test_rejects_too_few_vertices(self):
        with pytest.raises(geo.GeometryError):
            Polygon(((0, 0), (1, 0)))

    def test_rejects_clockwise(self):
        with pytest.raises(geo.GeometryError):
            Polygon(((0, 0), (0, 1), (1, 1), (1, 0)))

    def test_rejects_self_intersection(self):
        with pytest.raises(geo.GeometryError):
            Polygon(((0, 0), (1, 1), (1, 0), (0, 1)))

    def test_make_polygon_reorients(self):
        p = geo.make_polygon([(0, 0), (0, 1), (1, 1), (1, 0)])
        assert p.area > 0


class TestContains:
    def test_interior(self):
        assert contains(UNIT_SQUARE, Point2(0.5, 0.5))

    def test_outside(self):
        assert not contains(UNIT_SQUARE, Point2(2.0, 0.0))

    def test_boundary_counts_as_inside(self):
        assert contains(UNIT_SQUARE, Point2(1.0, 0.5))


class TestClip:
    def test_identity(self):
        parts = clip(UNIT_SQUARE, UNIT_SQUARE)
        assert len(parts) == 1
        assert parts[0].area == pytest.approx(1.0, abs=1e-12)

    def test_disjoint(self):
        far = geo.rect(5.0, 5.0, 6.0, 6.0)
        assert clip(UNIT_SQUARE, far) == []

    def test_half_overlap_area_vs_sampling_oracle(self):
        window = geo.rect(0.5, 0.0, 1.5, 1.0)
        parts = clip(UNIT_SQUARE, window)
        area = sum(p.area for p in parts)

        # Dense midpoint grid over a box covering both polygons, 10^4 points.
        xs = np.linspace(-0.5 + 0.0125, 2.0 - 0.0125, 100)
        ys = np.linspace(-0.5 + 0.01, 1.5 - 0.01, 100)
        cell = (2.5 / 100) * (2.0 / 100)
        inside = sum(
            1 for x in xs for y in ys
            if contains(UNIT_SQUARE, Point2(x, y)) and contains(window, Point2(x, y))
        )
        sampled_area = inside * cell
        assert area == pytest.approx(0.5, abs=1e-9)
        assert area == pytest.approx(sampled_area, rel=0.01)

    def test_non_convex_window_rejected(self):
        w = geo.make_polygon([(0, 0), (2, 0), (2, 2), (1, 0.5), (0, 2)])
        with pytest.raises(geo.GeometryError):
            clip(UNIT_SQUARE, w)

    def test_idempotent(self):
        window = geo.rect(0.3, -0.2, 1.4, 0.8)
        once = clip(UNIT_SQUARE, window)
        twice = [q for p in once for q in clip(p, window)]
        a1 = sum(p.area for p in once)
        a2 = sum(p.area for p in twice)
        assert abs(a1 - a2) < 1e-9

    def test_results_ccw(self):
        window = geo.rect(0.25, 0.25, 2.0, 2.0)
        for p in clip(UNIT_SQUARE, window):
            assert p.area > 0


class TestOcclusionShadow:
    origin = Point2(0.0, 0.0)
    occluder = geo.rect(9.5, -0.5, 10.5, 0.5)  # unit square centered (10, 0)

    def test_beyond_range_empty(self):
        far = geo.rect(199.5, -0.5, 200.5, 0.5)
        assert occlusion_shadow(self.origin, far, 100.0) is None

    def test_origin_inside_rejected(self):
        with pytest.raises(geo.GeometryError):
            occlusion_shadow(Point2(10.0, 0.0), self.occluder, 50.0)

    def test_behind_and_beside_points(self):
        shadow = occlusion_shadow(self.origin, self.occluder, 30.0)
        assert contains(shadow, Point2(20.0, 0.0))
        assert not contains(shadow, Point2(10.0, 5.0))

    def test_symmetry_about_x_axis(self):
        shadow = occlusion_shadow(self.origin, self.occluder, 30.0)
        verts = shadow.as_array()
        mirrored = verts * np.array([1.0, -1.0])
        # Match each mirrored vertex to some original vertex.
        for mx, my in mirrored:
            d = np.min(np.hypot(verts[:, 0] - mx, verts[:, 1] - my))
            assert d < 1e-9

    def test_vertices_within_range_plus_tolerance(self):
        for r in (15.0, 30.0, 80.0):
            shadow = occlusion_shadow(self.origin, self.occluder, r)
            verts = shadow.as_array()
            dists = np.hypot(verts[:, 0], verts[:, 1])
            assert np.max(dists) <= r + geo.ARC_CHORD_TOL + 1e-9

    def test_partition_matches_raycast_oracle(self):
        max_range = 30.0
        shadow = occlusion_shadow(self.origin, self.occluder, max_range)
        rng = np.random.default_rng(42)
        checked = 0
        while checked < 1000:
            x, y = rng.uniform(-max_range, max_range, size=2)
            r = math.hypot(x, y)
            # Stay clear of the chord band at the range arc and of the
            # occluder itself; the polygon is exact elsewhere.
            if r >= max_range - geo.ARC_CHORD_TOL * 2 or r < 0.5:
                continue
            if contains(self.occluder, Point2(x, y)):
                continue
            expected = segment_hits_interior((0.0, 0.0), (x, y), self.occluder)
            assert contains(shadow, Point2(x, y)) == expected, (x, y)
            checked += 1

    def test_non_convex_occluder(self):
        # L-shape: the notch opens away from the origin.
        occ = geo.make_polygon([(8, -2), (10, -2), (10, 2), (8, 2), (8, 1), (9, 1), (9, -1), (8, -1)])
        shadow = occlusion_shadow(self.origin, occ, 40.0)
        assert contains(shadow, Point2(20.0, 0.0))
        assert not contains(shadow, Point2(5.0, 0.0))


class TestGrowPolygon:
    def test_zero_radius_identity(self):
        assert geo.grow_polygon(UNIT_SQUARE, 0.0) is UNIT_SQUARE

    def test_unit_square_area_closed_form(self):
        grown = geo.grow_polygon(UNIT_SQUARE, 1.0)
        exact = 1.0 + 4.0 * 1.0 + math.pi
        assert grown.area >= exact - 1e-9
        assert grown.area <= exact * 1.02

    def test_point_like_region_extent(self):
        eps = 1e-6
        tiny = geo.rect(-eps, -eps, eps, eps)
        grown = geo.grow_polygon(tiny, 1.45)
        assert contains(grown, Point2(1.44, 0.0))
        assert not contains(grown, Point2(1.52, 0.0))

    def test_axis_extent_is_exact(self):
        grown = geo.grow_polygon(UNIT_SQUARE, 0.7)
        xs = grown.as_array()[:, 0]
        assert np.min(xs) == pytest.approx(-0.7, abs=1e-12)
        assert np.max(xs) == pytest.approx(1.7, abs=1e-12)

    def test_contains_true_disc_sum(self):
        rng = np.random.default_rng(3)
        grown = geo.grow_polygon(UNIT_SQUARE, 0.5)
        for _ in range(500):
            x, y = rng.uniform(-1, 2, size=2)
            d = _dist_to_rect(x, y)
            if d <= 0.5:
                assert contains(grown, Point2(x, y))
            elif d > 0.5 / math.cos(math.pi / 16) + 1e-9:
                assert not contains(grown, Point2(x, y))


def _dist_to_rect(x, y):
    dx = max(0.0 - x, 0.0, x - 1.0)
    dy = max(0.0 - y, 0.0, y - 1.0)
    return math.hypot(dx, dy)


class TestSector:
    def test_full_circle(self):
        s = geo.sector(Point2(0, 0), 0.0, 2 * math.pi, 10.0)
        assert contains(s, Point2(9.9, 0.0))
        assert contains(s, Point2(-9.9, 0.0))
        assert s.area == pytest.approx(math.pi * 100, rel=0.01)

    def test_half_circle(self):
        s = geo.sector(Point2(0, 0), 0.0, math.pi, 10.0)
        assert contains(s, Point2(5.0, 4.0))
        assert not contains(s, Point2(-5.0, 0.1))
