import json
import math

import pytest
from hypothesis import given, strategies as st

from typomap.corpus import LanguageMeta
from typomap.geofilter import Region, RegionError, contains, filter_languages, load_region, region_from_geojson

SQUARE = [[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]]


def poly(*rings):
    return {"type": "Polygon", "coordinates": list(rings)}


def test_unit_square_structure(tmp_path):
    p = tmp_path / "r.geojson"
    p.write_text(json.dumps({"type": "FeatureCollection",
                             "features": [{"type": "Feature", "properties": {}, "geometry": poly(SQUARE)}]}))
    r = load_region(p)
    assert len(r.polygons) == 1
    assert len(r.polygons[0]) == 1
    assert len(r.polygons[0][0]) == 5


def test_multipolygon_two_squares():
    other = [[x + 3, y] for x, y in SQUARE]
    r = region_from_geojson({"type": "MultiPolygon", "coordinates": [[SQUARE], [other]]})
    assert len(r.polygons) == 2
    assert contains(r, 3.5, 0.5) and contains(r, 0.5, 0.5) and not contains(r, 2.0, 0.5)


def test_point_only_is_error():
    with pytest.raises(RegionError):
        region_from_geojson({"type": "Point", "coordinates": [0, 0]})
    with pytest.raises(RegionError):
        region_from_geojson({"type": "LineString", "coordinates": [[0, 0], [1, 1]]})


def test_unclosed_ring_is_closed(caplog):
    r = region_from_geojson(poly(SQUARE[:-1]))
    assert r.polygons[0][0][0] == r.polygons[0][0][-1]
    assert "not closed" in caplog.text


def test_contains_examples():
    r = region_from_geojson(poly(SQUARE))
    assert contains(r, 0.5, 0.5)
    assert not contains(r, 1.5, 0.5)


def _crossings(ring, x, y):
    # hand-enumerated ray crossings to +x; oracle for the hole case
    n = 0
    for (x1, y1), (x2, y2) in zip(ring, ring[1:]):
        if (y1 > y) != (y2 > y) and x < x1 + (y - y1) * (x2 - x1) / (y2 - y1):
            n += 1
    return n


def test_hole_excluded():
    outer = [[0, 0], [4, 0], [4, 4], [0, 4], [0, 0]]
    hole = [[1, 1], [3, 1], [3, 3], [1, 3], [1, 1]]
    r = region_from_geojson(poly(outer, hole))
    # ray from (2, 2) crosses outer once and hole once: even -> outside
    assert _crossings(outer, 2, 2) + _crossings(hole, 2, 2) == 2
    assert not contains(r, 2, 2)
    assert contains(r, 0.5, 2)


def test_boundary_counts_as_inside():
    r = region_from_geojson(poly(SQUARE))
    assert contains(r, 1.0, 0.5)
    assert contains(r, 0.0, 0.0)


def regular_polygon(cx, cy, radius, n, phase):
    pts = [[cx + radius * math.cos(phase + 2 * math.pi * k / n), cy + radius * math.sin(phase + 2 * math.pi * k / n)]
           for k in range(n)]
    return pts + [pts[0]]


coord = st.floats(-50, 50, allow_nan=False)


@given(coord, coord, st.floats(0.5, 20), st.integers(3, 12), st.floats(0, 6.28))
def test_convex_polygon_contains_centroid(cx, cy, radius, n, phase):
    r = region_from_geojson(poly(regular_polygon(cx, cy, radius, n, phase)))
    assert contains(r, cx, cy)
    assert not contains(r, cx + 2 * radius + 1, cy)


@given(st.integers(3, 10), st.integers(0, 9), st.floats(-3, 3), st.floats(-3, 3))
def test_ring_rotation_invariance(n, shift, x, y):
    ring = regular_polygon(0, 0, 2, n, 0.3)[:-1]
    shift %= n
    rotated = ring[shift:] + ring[:shift]
    a = region_from_geojson(poly(ring + [ring[0]]))
    b = region_from_geojson(poly(rotated + [rotated[0]]))
    rev = list(reversed(ring))
    c = region_from_geojson(poly(rev + [rev[0]]))
    assert contains(a, x, y) == contains(b, x, y) == contains(c, x, y)


@given(st.floats(-0.9, 0.9), st.floats(-0.9, 0.9))
def test_points_in_hole_excluded(x, y):
    outer = [[-3, -3], [3, -3], [3, 3], [-3, 3], [-3, -3]]
    hole = [[-1, -1], [1, -1], [1, 1], [-1, 1], [-1, -1]]
    r = region_from_geojson(poly(outer, hole))
    assert not contains(r, x, y)
    assert contains(r, x + 2.0 * math.copysign(1, x) if x else 2.0, y)


@given(st.lists(st.tuples(st.floats(-180, 180), st.floats(-90, 90)), max_size=30))
def test_filter_partitions_input(points):
    metas = [LanguageMeta(f"l{i}", "L", lon, lat) for i, (lon, lat) in enumerate(points)]
    region = region_from_geojson(poly([[-60, -30], [40, -30], [40, 50], [-60, 50], [-60, -30]]))
    kept = filter_languages(metas, region)
    dropped = [m for m in metas if m not in kept]
    assert kept == [m for m in metas if contains(region, m.lon, m.lat)]
    assert len(kept) + len(dropped) == len(metas)
    assert all(not contains(region, m.lon, m.lat) for m in dropped)


def test_filter_examples():
    region = region_from_geojson(poly(SQUARE))
    a, b, c = (LanguageMeta("a", "A", 0.5, 0.5), LanguageMeta("b", "B", 5, 5), LanguageMeta("c", "C", 0.2, 0.9))
    assert filter_languages([a, b, c], region) == [a, c]
    assert filter_languages([a, b, c], Region(())) == []
    assert filter_languages([a, c], region) == [a, c]
