"""Planar polygon primitives shared by the surface, planner and coverage code.

Polygons are (K, 2) float64 arrays of vertices in mm, implicitly closed
(vertex K-1 connects back to vertex 0). All distance computations are
Euclidean in the uv plane, which on our surfaces is an arc-length
parameterization, so uv distances equal geodesic distances on the surface.

Point-set queries are vectorized over points x edges; callers working on
large rasters should batch points in row blocks to bound memory.
"""

from __future__ import annotations

import numpy as np

Polygon = np.ndarray


def as_polygon(vertices) -> Polygon:
    """Coerce to a validated (K, 2) float64 vertex array, K >= 3."""
    poly = np.asarray(vertices, dtype=np.float64)
    if poly.ndim != 2 or poly.shape[1] != 2:
        raise ValueError(f"polygon must be (K, 2) vertices, got shape {poly.shape}")
    if poly.shape[0] < 3:
        raise ValueError(f"polygon needs at least 3 vertices, got {poly.shape[0]}")
    if not np.all(np.isfinite(poly)):
        raise ValueError("polygon vertices must be finite")
    return poly


def polygon_area(poly: Polygon) -> float:
    """Unsigned area by the shoelace formula, mm^2."""
    poly = as_polygon(poly)
    x, y = poly[:, 0], poly[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    return float(abs(np.sum(x * yn - xn * y)) / 2.0)


def _segments_properly_intersect(p1, p2, q1, q2) -> bool:
    """True if open segments p1-p2 and q1-q2 cross at an interior point."""

    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 != d2 and d3 != d4


def polygon_is_simple(poly: Polygon) -> bool:
    """True if no two non-adjacent edges intersect. O(K^2); K is small here."""
    poly = as_polygon(poly)
    k = poly.shape[0]
    edges = [(poly[i], poly[(i + 1) % k]) for i in range(k)]
    for i in range(k):
        for j in range(i + 1, k):
            if j == i or (j + 1) % k == i or (i + 1) % k == j:
                continue  # shared-vertex neighbours
            if _segments_properly_intersect(*edges[i], *edges[j]):
                return False
    return True


def points_in_polygon(points: np.ndarray, poly: Polygon) -> np.ndarray:
    """Even-odd (ray casting) containment test, vectorized.

    points: (N, 2). Returns (N,) bool. Boundary behaviour follows the
    half-open crossing rule; exact-boundary points are measure zero at
    raster resolution and may land on either side.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    poly = as_polygon(poly)
    px = points[:, 0][:, None]
    py = points[:, 1][:, None]
    x1 = poly[:, 0][None, :]
    y1 = poly[:, 1][None, :]
    x2 = np.roll(poly[:, 0], -1)[None, :]
    y2 = np.roll(poly[:, 1], -1)[None, :]

    crosses = (y1 > py) != (y2 > py)
    # Guard the division: edges that do not cross contribute nothing.
    with np.errstate(divide="ignore", invalid="ignore"):
        x_int = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
    hits = crosses & (px < x_int)
    return np.sum(hits, axis=1) % 2 == 1


def distance_to_boundary(points: np.ndarray, poly: Polygon) -> np.ndarray:
    """Min Euclidean distance from each point to the polygon's edge loop."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    poly = as_polygon(poly)
    a = poly
    b = np.roll(poly, -1, axis=0)
    ab = b - a  # (K, 2)
    ab2 = np.sum(ab * ab, axis=1)  # (K,)
    ab2 = np.where(ab2 == 0.0, 1.0, ab2)  # degenerate edge -> treat as point a

    ap = points[:, None, :] - a[None, :, :]  # (N, K, 2)
    t = np.clip(np.sum(ap * ab[None, :, :], axis=2) / ab2[None, :], 0.0, 1.0)
    closest = a[None, :, :] + t[:, :, None] * ab[None, :, :]
    d = np.linalg.norm(points[:, None, :] - closest, axis=2)
    return np.min(d, axis=1)


def signed_distance(points: np.ndarray, poly: Polygon) -> np.ndarray:
    """Distance to the boundary, negative for points inside the polygon."""
    d = distance_to_boundary(points, poly)
    inside = points_in_polygon(points, poly)
    return np.where(inside, -d, d)


def points_in_any(points: np.ndarray, polys) -> np.ndarray:
    """Containment in the union of several polygons."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    out = np.zeros(points.shape[0], dtype=bool)
    for poly in polys:
        out |= points_in_polygon(points, poly)
    return out


def distance_to_any(points: np.ndarray, polys) -> np.ndarray:
    """Min distance to the filled union of polygons: 0 inside, else edge distance."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    d = np.full(points.shape[0], np.inf)
    for poly in polys:
        d = np.minimum(d, np.abs(signed_distance(points, poly)))
        d[points_in_polygon(points, poly)] = 0.0
    return d


def polygons_bounds(polys) -> tuple[float, float, float, float]:
    """(umin, vmin, umax, vmax) over a non-empty list of polygons."""
    polys = [as_polygon(p) for p in polys]
    if not polys:
        raise ValueError("no polygons given")
    allv = np.vstack(polys)
    return (
        float(allv[:, 0].min()),
        float(allv[:, 1].min()),
        float(allv[:, 0].max()),
        float(allv[:, 1].max()),
    )


def rectangle(u0: float, v0: float, width: float, height: float) -> Polygon:
    """Axis-aligned rectangle polygon with corner (u0, v0), CCW."""
    return np.array(
        [[u0, v0], [u0 + width, v0], [u0 + width, v0 + height], [u0, v0 + height]],
        dtype=np.float64,
    )
