"""Select language varieties whose coordinates fall inside a GeoJSON region.

Geometry is planar on raw lon/lat.  Points on a ring edge count as inside.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

from .corpus import LanguageMeta

log = logging.getLogger(__name__)

Ring = Tuple[Tuple[float, float], ...]
Polygon = Tuple[Ring, ...]  # outer ring first, then holes


class RegionError(ValueError):
    pass


@dataclass(frozen=True)
class Region:
    polygons: Tuple[Polygon, ...]


def _ring(coords, where) -> Ring:
    pts = tuple((float(p[0]), float(p[1])) for p in coords)
    if len(set(pts)) < 3:
        raise RegionError(f"{where}: ring needs at least 3 distinct vertices")
    if pts[0] != pts[-1]:
        log.warning("%s: ring not closed, closing it", where)
        pts = pts + (pts[0],)
    return pts


def _geometries(obj):
    kind = obj.get("type")
    if kind == "FeatureCollection":
        for feat in obj.get("features", []):
            yield from _geometries(feat)
    elif kind == "Feature":
        if obj.get("geometry") is not None:
            yield from _geometries(obj["geometry"])
    elif kind == "GeometryCollection":
        for g in obj.get("geometries", []):
            yield from _geometries(g)
    else:
        yield obj


def region_from_geojson(obj) -> Region:
    polygons = []
    for i, geom in enumerate(_geometries(obj)):
        kind = geom.get("type")
        if kind == "Polygon":
            parts = [geom["coordinates"]]
        elif kind == "MultiPolygon":
            parts = geom["coordinates"]
        else:
            raise RegionError(f"unsupported geometry type {kind!r}")
        for j, rings in enumerate(parts):
            polygons.append(tuple(_ring(r, f"geometry {i} polygon {j} ring {k}")
                                  for k, r in enumerate(rings)))
    if not polygons:
        raise RegionError("no Polygon or MultiPolygon geometry found")
    return Region(tuple(polygons))


def load_region(path) -> Region:
    with open(path, encoding="utf-8") as f:
        return region_from_geojson(json.load(f))


def _on_segment(x, y, x1, y1, x2, y2) -> bool:
    cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)
    if cross != 0.0:
        return False
    return min(x1, x2) <= x <= max(x1, x2) and min(y1, y2) <= y <= max(y1, y2)


def _polygon_contains(poly: Polygon, x: float, y: float) -> bool:
    inside = False
    for ring in poly:
        for (x1, y1), (x2, y2) in zip(ring, ring[1:]):
            if _on_segment(x, y, x1, y1, x2, y2):
                return True
            if (y1 > y) != (y2 > y):
                xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
                if x < xc:
                    inside = not inside
    return inside


def contains(region: Region, lon: float, lat: float) -> bool:
    """Even-odd test against every polygon; holes are handled by the parity."""
    return any(_polygon_contains(p, lon, lat) for p in region.polygons)


def filter_languages(metas: Sequence[LanguageMeta], region: Region) -> List[LanguageMeta]:
    kept = [m for m in metas if contains(region, m.lon, m.lat)]
    log.info("geofilter kept %d of %d varieties", len(kept), len(metas))
    return kept
