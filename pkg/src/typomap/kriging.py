"""Ordinary (indicator) kriging over the semantic map and iso-contour extraction."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

log = logging.getLogger(__name__)

DEFAULT_LEVELS = (0.8, 0.85, 0.9, 0.95, 1.0)
JOIN_TOL = 1e-9


class KrigingError(ValueError):
    pass


@dataclass(frozen=True)
class VariogramParams:
    """Gaussian variogram ``nugget + psill * (1 - exp(-3 h^2 / range^2))``.

    There is a single lag bin, so parameters are set by hand, never fitted.
    """
    nugget: float = 0.0
    psill: float = 1.0
    range: float = 1.0
    model: str = "gaussian"
    nlag: int = 1

    def __post_init__(self):
        if self.model != "gaussian":
            raise KrigingError(f"unsupported variogram model {self.model!r}")
        if self.nugget < 0 or self.psill <= 0 or self.range <= 0:
            raise KrigingError(f"invalid variogram parameters {self}")
        if self.nlag != 1:
            raise KrigingError("only a single lag bin is supported")


def gaussian_variogram(h, p: VariogramParams):
    h = np.asarray(h, dtype=float)
    return p.nugget + p.psill * (1.0 - np.exp(-3.0 * h ** 2 / p.range ** 2))


@dataclass(frozen=True)
class GridSpec:
    nx: int = 100
    ny: int = 100
    extent: Optional[Tuple[float, float, float, float]] = None  # xmin, xmax, ymin, ymax
    pad: float = 0.05

    def resolve(self, xy: np.ndarray) -> Tuple[float, float, float, float]:
        if self.extent is not None:
            return tuple(float(v) for v in self.extent)
        xmin, ymin = xy.min(axis=0)
        xmax, ymax = xy.max(axis=0)
        dx = (xmax - xmin) or 1.0
        dy = (ymax - ymin) or 1.0
        return (xmin - self.pad * dx, xmax + self.pad * dx, ymin - self.pad * dy, ymax + self.pad * dy)


@dataclass
class KrigingGrid:
    extent: Tuple[float, float, float, float]
    z: np.ndarray  # ny x nx, row k at y = ys[k]
    weight_sums: Optional[np.ndarray] = None

    @property
    def ny(self):
        return self.z.shape[0]

    @property
    def nx(self):
        return self.z.shape[1]

    @property
    def xs(self):
        return np.linspace(self.extent[0], self.extent[1], self.nx)

    @property
    def ys(self):
        return np.linspace(self.extent[2], self.extent[3], self.ny)

    @property
    def z_norm(self):
        return normalize(self.z)


FLAT_TOL = 1e-9


def normalize(z: np.ndarray) -> np.ndarray:
    """Rescale to [0, 1]; fields flat up to solver roundoff map to zeros."""
    lo, hi = float(np.min(z)), float(np.max(z))
    if hi - lo > FLAT_TOL * max(1.0, abs(lo), abs(hi)):
        return (z - lo) / (hi - lo)
    return np.zeros_like(z)


def great_circle_degrees(x1, y1, x2, y2):
    """Central angle in degrees between (lon, lat) points."""
    lon1, lat1, lon2, lat2 = map(np.radians, (x1, y1, x2, y2))
    a = np.sin((lat2 - lat1) / 2) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2
    return np.degrees(2 * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0))))


def _distances(ax, ay, bx, by, geographic):
    if geographic:
        return great_circle_degrees(ax[:, None], ay[:, None], bx[None, :], by[None, :])
    return np.hypot(ax[:, None] - bx[None, :], ay[:, None] - by[None, :])


def merge_duplicates(samples):
    """Average values that share an exact location; output sorted by location."""
    acc: Dict[Tuple[float, float], List[float]] = {}
    for x, y, v in samples:
        x, y, v = float(x), float(y), float(v)
        if not (math.isfinite(x) and math.isfinite(y)):
            raise KrigingError(f"non-finite sample coordinate ({x}, {y})")
        acc.setdefault((x, y), []).append(v)
    keys = sorted(acc)
    return np.array([[x, y, math.fsum(acc[(x, y)]) / len(acc[(x, y)])] for x, y in keys])


def ordinary_krige(samples, params: VariogramParams, grid: GridSpec = GridSpec(),
                   geographic: bool = False, points: Optional[np.ndarray] = None):
    """Ordinary kriging of ``samples`` (x, y, value) onto a grid (or at ``points``).

    The kriging matrix is factorized once with partially pivoted LU; zero
    distances get semivariance 0 so the predictor honours the data exactly
    when the nugget is 0.  Returns a KrigingGrid, or an array when
    ``points`` is given.
    """
    S = merge_duplicates(samples)
    n = len(S)
    if n < 2:
        raise KrigingError("need at least 2 samples at distinct locations")
    sx, sy, sv = S[:, 0], S[:, 1], S[:, 2]
    A = np.ones((n + 1, n + 1))
    A[:n, :n] = gaussian_variogram(_distances(sx, sy, sx, sy, geographic), params)
    np.fill_diagonal(A[:n, :n], 0.0)
    A[n, n] = 0.0
    try:
        lu = scipy.linalg.lu_factor(A, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise KrigingError(f"kriging system is singular: {e}") from e
    if np.any(np.diag(lu[0]) == 0.0):
        raise KrigingError("kriging system is singular")

    if points is not None:
        qx, qy = np.asarray(points, float)[:, 0], np.asarray(points, float)[:, 1]
        extent = None
    else:
        extent = grid.resolve(S[:, :2])
        gx = np.linspace(extent[0], extent[1], grid.nx)
        gy = np.linspace(extent[2], extent[3], grid.ny)
        qxx, qyy = np.meshgrid(gx, gy)
        qx, qy = qxx.ravel(), qyy.ravel()
    if not (np.all(np.isfinite(qx)) and np.all(np.isfinite(qy))):
        raise KrigingError("non-finite query coordinates")

    d = _distances(sx, sy, qx, qy, geographic)
    rhs = np.ones((n + 1, len(qx)))
    rhs[:n] = gaussian_variogram(d, params)
    rhs[:n][d == 0.0] = 0.0
    w = scipy.linalg.lu_solve(lu, rhs)
    pred = sv @ w[:n]
    wsum = w[:n].sum(axis=0)
    if points is not None:
        return pred
    return KrigingGrid(extent, pred.reshape(grid.ny, grid.nx), wsum.reshape(grid.ny, grid.nx))


def krige_weights(samples, params: VariogramParams, query, geographic=False) -> np.ndarray:
    """Kriging weights for a single query point, one per input sample in input order.

    Samples sharing a location split that location's weight evenly.
    """
    samples = [tuple(float(v) for v in s) for s in samples]
    S = merge_duplicates(samples)
    n = len(S)
    A = np.ones((n + 1, n + 1))
    A[:n, :n] = gaussian_variogram(_distances(S[:, 0], S[:, 1], S[:, 0], S[:, 1], geographic), params)
    np.fill_diagonal(A[:n, :n], 0.0)
    A[n, n] = 0.0
    q = np.asarray(query, float).reshape(1, 2)
    d = _distances(S[:, 0], S[:, 1], q[:, 0], q[:, 1], geographic)[:, 0]
    b = np.ones(n + 1)
    b[:n] = np.where(d == 0.0, 0.0, gaussian_variogram(d, params))
    w = scipy.linalg.lu_solve(scipy.linalg.lu_factor(A), b)[:n]
    index = {(x, y): k for k, (x, y) in enumerate(S[:, :2].tolist())}
    mult: Dict[Tuple[float, float], int] = {}
    for x, y, _ in samples:
        mult[(x, y)] = mult.get((x, y), 0) + 1
    return np.array([w[index[(x, y)]] / mult[(x, y)] for x, y, _ in samples])


# -- contours -----------------------------------------------------------------

@dataclass
class ContourSet:
    label: str
    levels: List[float]
    lines: Dict[float, List[List[Tuple[float, float]]]] = field(default_factory=dict)


# edges of a cell: 0 bottom (c00-c10), 1 right (c10-c11), 2 top (c01-c11), 3 left (c00-c01)
_CASES = {
    0: [], 15: [],
    1: [(3, 0)], 14: [(3, 0)],
    2: [(0, 1)], 13: [(0, 1)],
    3: [(3, 1)], 12: [(3, 1)],
    4: [(1, 2)], 11: [(1, 2)],
    6: [(0, 2)], 9: [(0, 2)],
    7: [(3, 2)], 8: [(3, 2)],
}


def _segments(z, xs, ys, level):
    """Marching-squares segments keyed by the grid edges they start and end on."""
    ny, nx = z.shape
    above = z >= level
    segs = []

    def edge_point(i, j, e):
        # cell (i, j) spans x[j]..x[j+1], y[i]..y[i+1]; returns (key, point)
        if e == 0:
            a, b, key = (i, j), (i, j + 1), ("h", i, j)
        elif e == 2:
            a, b, key = (i + 1, j), (i + 1, j + 1), ("h", i + 1, j)
        elif e == 3:
            a, b, key = (i, j), (i + 1, j), ("v", i, j)
        else:
            a, b, key = (i, j + 1), (i + 1, j + 1), ("v", i, j + 1)
        za, zb = z[a], z[b]
        t = 0.5 if zb == za else (level - za) / (zb - za)
        x = xs[a[1]] + t * (xs[b[1]] - xs[a[1]])
        y = ys[a[0]] + t * (ys[b[0]] - ys[a[0]])
        return key, (float(x), float(y))

    for i in range(ny - 1):
        for j in range(nx - 1):
            idx = (int(above[i, j]) | int(above[i, j + 1]) << 1
                   | int(above[i + 1, j + 1]) << 2 | int(above[i + 1, j]) << 3)
            if idx in (0, 15):
                continue
            if idx in (5, 10):
                center = (z[i, j] + z[i, j + 1] + z[i + 1, j] + z[i + 1, j + 1]) / 4.0
                if idx == 5:  # c00 and c11 above
                    pairs = [(3, 2), (0, 1)] if center >= level else [(3, 0), (1, 2)]
                else:  # c10 and c01 above
                    pairs = [(3, 0), (1, 2)] if center >= level else [(3, 2), (0, 1)]
            else:
                pairs = _CASES[idx]
            for e1, e2 in pairs:
                segs.append((edge_point(i, j, e1), edge_point(i, j, e2)))
    return segs


def _join(segs):
    """Chain segments sharing edge intersections into polylines."""
    adj: Dict[tuple, List[int]] = {}
    pts = {}
    for k, ((ka, pa), (kb, pb)) in enumerate(segs):
        adj.setdefault(ka, []).append(k)
        adj.setdefault(kb, []).append(k)
        pts[ka], pts[kb] = pa, pb
    used = [False] * len(segs)

    def walk(start_key, k):
        chain = [start_key]
        key = start_key
        while k is not None:
            used[k] = True
            ka, kb = segs[k][0][0], segs[k][1][0]
            key = kb if ka == key else ka
            chain.append(key)
            k = next((m for m in adj[key] if not used[m]), None)
        return chain

    lines = []
    # open chains start at edges with a single segment; the rest are loops
    order = sorted(adj, key=lambda kk: (len(adj[kk]) != 1, kk))
    for key in order:
        for k in adj[key]:
            if used[k]:
                continue
            chain = walk(key, k)
            lines.append(chain)
    out = []
    for chain in lines:
        poly = [pts[chain[0]]]
        for key in chain[1:]:
            p = pts[key]
            if not _close(p, poly[-1]):
                poly.append(p)
        out.append(poly)
    return _merge_polylines(out)


def _close(p, q):
    return abs(p[0] - q[0]) <= JOIN_TOL and abs(p[1] - q[1]) <= JOIN_TOL


def _merge_polylines(lines):
    # chains that meet at a grid node (level hit exactly) share an endpoint geometrically
    lines = [list(l) for l in lines]
    merged = True
    while merged:
        merged = False
        for a in range(len(lines)):
            la = lines[a]
            if len(la) > 2 and _close(la[0], la[-1]):
                continue
            for b in range(a + 1, len(lines)):
                lb = lines[b]
                if len(lb) > 2 and _close(lb[0], lb[-1]):
                    continue
                if _close(la[-1], lb[0]):
                    lines[a] = la + lb[1:]
                elif _close(la[-1], lb[-1]):
                    lines[a] = la + lb[-2::-1]
                elif _close(la[0], lb[-1]):
                    lines[a] = lb + la[1:]
                elif _close(la[0], lb[0]):
                    lines[a] = lb[::-1] + la[1:]
                else:
                    continue
                del lines[b]
                merged = True
                break
            if merged:
                break
    return lines


def extract_contours(grid: KrigingGrid, levels: Sequence[float] = DEFAULT_LEVELS, label: str = "") -> ContourSet:
    """Iso-lines of the normalized field at each level (marching squares)."""
    levels = sorted(float(l) for l in levels)
    for l in levels:
        if not 0.0 <= l <= 1.0:
            raise KrigingError(f"contour level {l} outside [0, 1]")
    z = grid.z_norm
    cs = ContourSet(label, levels)
    if not np.any(z):
        for l in levels:
            cs.lines[l] = []
        return cs
    xs, ys = grid.xs, grid.ys
    for l in levels:
        cs.lines[l] = _join(_segments(z, xs, ys, l))
    return cs


# -- per-language driver ------------------------------------------------------

@dataclass
class LabelSurface:
    label: str
    params: VariogramParams
    grid: KrigingGrid
    contours: ContourSet


def default_params(values: np.ndarray, extent) -> VariogramParams:
    """psill = indicator variance, range = half the grid diagonal, nugget = 0."""
    var = float(np.var(values))
    diag = math.hypot(extent[1] - extent[0], extent[3] - extent[2])
    return VariogramParams(nugget=0.0, psill=var if var > 0 else 1.0, range=diag / 2 or 1.0)


def krige_language(xy: np.ndarray, labels: Sequence[str], grid: GridSpec = GridSpec(),
                   levels: Sequence[float] = DEFAULT_LEVELS,
                   params: Optional[Dict[str, VariogramParams]] = None,
                   overrides: Optional[dict] = None, geographic: bool = False) -> List[LabelSurface]:
    """One indicator-kriging surface per label used at two or more points.

    ``params`` gives explicit variograms per label; ``overrides`` replaces
    individual fields of the default variogram (``nugget``, ``psill``,
    ``range``) for every label.
    """
    xy = np.asarray(xy, float)
    labels = list(labels)
    extent = grid.resolve(xy)
    fixed = GridSpec(grid.nx, grid.ny, extent)
    out = []
    for lab in sorted(set(labels)):
        ind = np.array([1.0 if l == lab else 0.0 for l in labels])
        if ind.sum() < 2:
            log.warning("label %r occurs at fewer than 2 points, skipped", lab)
            continue
        merged = merge_duplicates(np.column_stack([xy, ind]))
        if len(merged) < 2:
            log.warning("label %r: all samples coincide, skipped", lab)
            continue
        if params and lab in params:
            p = params[lab]
        else:
            p = default_params(merged[:, 2], extent)
            if overrides:
                p = VariogramParams(**{**p.__dict__, **overrides})
        g = ordinary_krige(merged, p, fixed, geographic)
        out.append(LabelSurface(lab, p, g, extract_contours(g, levels, lab)))
    return out


def write_grid(path, g: KrigingGrid) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("x\ty\tz\tz_norm\n")
        zn = g.z_norm
        xs, ys = g.xs, g.ys
        for i in range(g.ny):
            for j in range(g.nx):
                f.write(f"{xs[j]:.10g}\t{ys[i]:.10g}\t{g.z[i, j]:.10g}\t{zn[i, j]:.10g}\n")


def write_contours(path, cs: ContourSet) -> None:
    """One polyline per line: ``level<TAB>x,y x,y ...``."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for l in cs.levels:
            for line in cs.lines.get(l, []):
                f.write(f"{l:g}\t" + " ".join(f"{x:.10g},{y:.10g}" for x, y in line) + "\n")


def read_contours(path, label="") -> ContourSet:
    lines: Dict[float, list] = {}
    with open(path, encoding="utf-8") as f:
        for row in f:
            lev, _, coords = row.rstrip("\n").partition("\t")
            pts = [tuple(float(v) for v in p.split(",")) for p in coords.split()]
            lines.setdefault(float(lev), []).append(pts)
    return ContourSet(label, sorted(lines), lines)
