"""Surfaces, phantoms and treatment regions.

A SurfaceModel is a triangle mesh with an optional uv parameterization.
All planning and scoring happens in uv space; the parameterizations built
here are arc-length (1 uv mm = 1 geodesic mm on the surface), which makes
spot spacing and footprint constraints exact in uv.

Two synthetic phantoms stand in for scanned faces: a flat rectangular
patch (identity uv) and a cylindrical-section cheek phantom (arc-length
uv along the bend). Arbitrary meshes arrive via ASCII PLY or OBJ files.

A Region nails down where treatment is allowed: selection polygons minus
landmark exclusion zones dilated by a safety margin. The dilation metric
is Euclidean disc dilation in uv, evaluated exactly through distance
fields rather than approximated on a grid.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import geometry
from .errors import MeshError, RegionError

# Raster resolution used when a Region computes its own operable area.
# 0.05mm keeps disc-area error under 0.5% for 6mm spots.
DEFAULT_PIXEL_SIZE_MM = 0.05

# Exclusion dilation default: 6mm spot radius + 2mm safety.
DEFAULT_MARGIN_MM = 5.0

EXCLUSION_LABELS = ("eyes", "lips", "eyebrows", "hairline", "custom")

_DEGENERATE_AREA_MM2 = 1e-10
_NORMAL_UNIT_TOL = 1e-6

# Pixel labels used by Region rasters (coverage.RasterMask re-exports these).
PX_OUTSIDE = 0
PX_OPERABLE = 1
PX_EXCLUDED = 2


# ---------------------------------------------------------------------------
# SurfaceModel


@dataclass(frozen=True, eq=False)
class SurfaceModel:
    """Validated, immutable triangle mesh.

    vertices: (N, 3) float64, mm. triangles: (M, 3) int64 vertex indices.
    vertex_normals: (N, 3) unit vectors, computed area-weighted if absent.
    uv: optional (N, 2) float64 arc-length parameterization, mm.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    vertex_normals: np.ndarray | None = None
    uv: np.ndarray | None = None

    def __post_init__(self):
        verts = np.ascontiguousarray(self.vertices, dtype=np.float64)
        tris = np.ascontiguousarray(self.triangles, dtype=np.int64)
        if verts.ndim != 2 or verts.shape[1] != 3:
            raise MeshError(f"vertices must be (N, 3), got {verts.shape}")
        if tris.ndim != 2 or tris.shape[1] != 3:
            raise MeshError(f"triangles must be (M, 3), got {tris.shape}")
        if not np.all(np.isfinite(verts)):
            bad = int(np.flatnonzero(~np.all(np.isfinite(verts), axis=1))[0])
            raise MeshError("non-finite coordinates", element=f"vertex {bad}")
        if tris.shape[0] == 0:
            raise MeshError("mesh has no triangles (total area would be 0)")
        if tris.min() < 0 or tris.max() >= verts.shape[0]:
            bad = int(
                np.flatnonzero((tris < 0) | (tris >= verts.shape[0]))[0] // 3
            )
            raise MeshError(
                f"vertex index out of range ({verts.shape[0]} vertices): "
                f"{tris[bad].tolist()}",
                element=f"face {bad}",
            )

        areas = _triangle_areas(verts, tris)
        degenerate = np.flatnonzero(areas < _DEGENERATE_AREA_MM2)
        if degenerate.size:
            raise MeshError(
                "zero-area (degenerate) triangle", element=f"face {int(degenerate[0])}"
            )

        normals = self.vertex_normals
        if normals is None:
            normals = _area_weighted_vertex_normals(verts, tris)
        else:
            normals = np.ascontiguousarray(normals, dtype=np.float64)
            if normals.shape != verts.shape:
                raise MeshError(
                    f"vertex_normals shape {normals.shape} != vertices {verts.shape}"
                )
            lengths = np.linalg.norm(normals, axis=1)
            off = np.flatnonzero(np.abs(lengths - 1.0) > _NORMAL_UNIT_TOL)
            if off.size:
                raise MeshError(
                    f"normal length {lengths[off[0]]:.9f} not unit",
                    element=f"vertex {int(off[0])}",
                )

        uv = self.uv
        if uv is not None:
            uv = np.ascontiguousarray(uv, dtype=np.float64)
            if uv.ndim != 2 or uv.shape != (verts.shape[0], 2):
                raise MeshError(f"uv must be (N, 2), got {uv.shape}")

        for arr in (verts, tris, normals) + ((uv,) if uv is not None else ()):
            arr.flags.writeable = False
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "triangles", tris)
        object.__setattr__(self, "vertex_normals", normals)
        object.__setattr__(self, "uv", uv)
        object.__setattr__(self, "_cache", {})

    # -- metrics ------------------------------------------------------------

    def triangle_areas(self) -> np.ndarray:
        if "areas" not in self._cache:
            self._cache["areas"] = _triangle_areas(self.vertices, self.triangles)
        return self._cache["areas"]

    def area(self) -> float:
        """Total mesh surface area, mm^2."""
        return float(self.triangle_areas().sum())

    @property
    def has_uv(self) -> bool:
        return self.uv is not None

    def uv_bounds(self) -> tuple[float, float, float, float]:
        uv = self._require_uv()
        return (
            float(uv[:, 0].min()),
            float(uv[:, 1].min()),
            float(uv[:, 0].max()),
            float(uv[:, 1].max()),
        )

    def _require_uv(self) -> np.ndarray:
        if self.uv is None:
            raise MeshError(
                "surface has no uv parameterization; load one or call ensure_uv()"
            )
        return self.uv

    # -- parameterization ---------------------------------------------------

    def ensure_uv(self) -> "SurfaceModel":
        """Return a model that definitely has uv.

        Planar meshes get an identity-scaled uv derived from their principal
        plane (SVD), anchored so the minimum corner is (0, 0). Non-planar
        meshes without stored uv are rejected: guessing a parameterization
        would silently distort every distance downstream.
        """
        if self.uv is not None:
            return self
        verts = self.vertices
        centroid = verts.mean(axis=0)
        centered = verts - centroid
        _, svals, vt = np.linalg.svd(centered, full_matrices=False)
        scale = float(svals[0]) if svals[0] > 0 else 1.0
        residual = float(np.abs(centered @ vt[2]).max())
        if residual > 1e-6 * max(scale, 1.0):
            raise MeshError(
                "mesh is not planar and carries no uv; cannot derive a "
                f"parameterization (out-of-plane extent {residual:.3g} mm)"
            )
        e1, e2 = vt[0], vt[1]
        # deterministic axis signs, then right-handedness w.r.t. mean normal
        if e1[np.argmax(np.abs(e1))] < 0:
            e1 = -e1
        if e2[np.argmax(np.abs(e2))] < 0:
            e2 = -e2
        if np.dot(np.cross(e1, e2), self.vertex_normals.mean(axis=0)) < 0:
            e2 = -e2
        uv = np.column_stack([centered @ e1, centered @ e2])
        uv -= uv.min(axis=0)
        return SurfaceModel(self.vertices, self.triangles, self.vertex_normals, uv)

    def _tri_xyz_tree(self) -> cKDTree:
        if "xyz_tree" not in self._cache:
            centroids = self.vertices[self.triangles].mean(axis=1)
            self._cache["xyz_tree"] = cKDTree(centroids)
        return self._cache["xyz_tree"]

    def _tri_uv_tree(self) -> cKDTree:
        if "uv_tree" not in self._cache:
            centroids = self._require_uv()[self.triangles].mean(axis=1)
            self._cache["uv_tree"] = cKDTree(centroids)
        return self._cache["uv_tree"]

    def lift(self, uv_points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Map uv points to 3D surface points and unit normals.

        Points outside the parameterized domain snap to the closest uv
        triangle (clamped barycentric), so callers get a well-defined pose
        for boundary-grazing queries.
        """
        uv_points = np.atleast_2d(np.asarray(uv_points, dtype=np.float64))
        tri_uv = self._require_uv()[self.triangles]  # (M, 3, 2)
        k = min(16, self.triangles.shape[0])
        _, cand = self._tri_uv_tree().query(uv_points, k=k)
        if cand.ndim == 1:
            cand = cand[:, None]
        w = _closest_point_weights(
            uv_points[:, None, :], tri_uv[cand]
        )  # (N, k, 3) barycentric
        closest = np.einsum("nkj,nkjd->nkd", w, tri_uv[cand])
        d2 = np.sum((uv_points[:, None, :] - closest) ** 2, axis=2)
        best = np.argmin(d2, axis=1)
        rows = np.arange(uv_points.shape[0])
        wbest = w[rows, best]  # (N, 3)
        tri = self.triangles[cand[rows, best]]  # (N, 3)
        xyz = np.einsum("nj,njd->nd", wbest, self.vertices[tri])
        nrm = np.einsum("nj,njd->nd", wbest, self.vertex_normals[tri])
        nrm /= np.linalg.norm(nrm, axis=1, keepdims=True)
        return xyz, nrm

    def project(self, xyz_points: np.ndarray) -> np.ndarray:
        """Map 3D points to uv via the closest point on the mesh."""
        xyz_points = np.atleast_2d(np.asarray(xyz_points, dtype=np.float64))
        tri_xyz = self.vertices[self.triangles]  # (M, 3, 3)
        tri_uv = self._require_uv()[self.triangles]
        k = min(16, self.triangles.shape[0])
        _, cand = self._tri_xyz_tree().query(xyz_points, k=k)
        if cand.ndim == 1:
            cand = cand[:, None]
        w = _closest_point_weights(xyz_points[:, None, :], tri_xyz[cand])
        closest = np.einsum("nkj,nkjd->nkd", w, tri_xyz[cand])
        d2 = np.sum((xyz_points[:, None, :] - closest) ** 2, axis=2)
        best = np.argmin(d2, axis=1)
        rows = np.arange(xyz_points.shape[0])
        return np.einsum("nj,njd->nd", w[rows, best], tri_uv[cand[rows, best]])


def _triangle_areas(verts: np.ndarray, tris: np.ndarray) -> np.ndarray:
    a = verts[tris[:, 0]]
    b = verts[tris[:, 1]]
    c = verts[tris[:, 2]]
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


def _area_weighted_vertex_normals(verts: np.ndarray, tris: np.ndarray) -> np.ndarray:
    a = verts[tris[:, 0]]
    b = verts[tris[:, 1]]
    c = verts[tris[:, 2]]
    face = np.cross(b - a, c - a)  # length = 2x area, weights by area for free
    normals = np.zeros_like(verts)
    for col in range(3):
        np.add.at(normals, tris[:, col], face)
    lengths = np.linalg.norm(normals, axis=1, keepdims=True)
    lengths[lengths == 0.0] = 1.0
    return normals / lengths


def _closest_point_weights(p: np.ndarray, tri: np.ndarray) -> np.ndarray:
    """Barycentric weights of the closest point on each triangle.

    p: (..., 1, D) query points broadcast against tri: (..., K, 3, D).
    Returns (..., K, 3) weights. Works for D = 2 and D = 3. Region
    classification follows Ericson's real-time collision detection
    formulation, vectorized with np.select.
    """
    a, b, c = tri[..., 0, :], tri[..., 1, :], tri[..., 2, :]
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = np.sum(ab * ap, axis=-1)
    d2 = np.sum(ac * ap, axis=-1)
    bp = p - b
    d3 = np.sum(ab * bp, axis=-1)
    d4 = np.sum(ac * bp, axis=-1)
    cp = p - c
    d5 = np.sum(ab * cp, axis=-1)
    d6 = np.sum(ac * cp, axis=-1)

    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    with np.errstate(divide="ignore", invalid="ignore"):
        v_ab = d1 / (d1 - d3)
        w_ac = d2 / (d2 - d6)
        w_bc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        denom = va + vb + vc
        v_in = vb / denom
        w_in = vc / denom

    zeros = np.zeros_like(d1)
    ones = np.ones_like(d1)

    conds = [
        (d1 <= 0) & (d2 <= 0),  # vertex a
        (d3 >= 0) & (d4 <= d3),  # vertex b
        (d6 >= 0) & (d5 <= d6),  # vertex c
        (vc <= 0) & (d1 >= 0) & (d3 <= 0),  # edge ab
        (vb <= 0) & (d2 >= 0) & (d6 <= 0),  # edge ac
        (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0),  # edge bc
    ]
    w0 = np.select(conds, [ones, zeros, zeros, 1 - v_ab, 1 - w_ac, zeros], 1 - v_in - w_in)
    w1 = np.select(conds, [zeros, ones, zeros, v_ab, zeros, 1 - w_bc], v_in)
    w2 = np.select(conds, [zeros, zeros, ones, zeros, w_ac, w_bc], w_in)
    return np.nan_to_num(np.stack([w0, w1, w2], axis=-1))


# ---------------------------------------------------------------------------
# Phantoms


def make_flat_patch(width: float, height: float) -> SurfaceModel:
    """Planar rectangular patch in the z=0 plane with identity uv.

    Corner at the origin, +z normals. Area is width x height exactly.
    """
    if width <= 0 or height <= 0:
        raise ValueError(f"patch dimensions must be positive, got {width}x{height}")
    verts = np.array(
        [
            [0.0, 0.0, 0.0],
            [width, 0.0, 0.0],
            [width, height, 0.0],
            [0.0, height, 0.0],
        ]
    )
    tris = np.array([[0, 1, 2], [0, 2, 3]])
    normals = np.tile([0.0, 0.0, 1.0], (4, 1))
    uv = verts[:, :2].copy()
    return SurfaceModel(verts, tris, normals, uv)


def make_cheek_phantom(
    width: float, height: float, curvature_radius: float
) -> SurfaceModel:
    """Cylindrical-section phantom bending along u, arc-length uv.

    p(u, v) = (R sin th, v, R (cos th - 1)) with th = (u - width/2) / R,
    so u is arc length along the bend and v runs along the cylinder axis;
    the apex touches z = 0. Outward normals (sin th, 0, cos th).
    """
    if width <= 0 or height <= 0:
        raise ValueError(f"phantom dimensions must be positive, got {width}x{height}")
    if curvature_radius < max(width, height) / 2.0:
        raise ValueError(
            f"curvature too tight: radius {curvature_radius} mm < "
            f"max({width}, {height})/2 mm"
        )
    r = float(curvature_radius)
    theta_span = width / r
    # chord deficit (sin x / x) stays under 2e-5 at 0.02 rad steps; the
    # v step only matters for projection locality, 4mm is plenty.
    ncols = max(2, int(np.ceil(theta_span / 0.02)) + 1)
    nrows = max(2, int(np.ceil(height / 4.0)) + 1)
    u = np.linspace(0.0, width, ncols)
    v = np.linspace(0.0, height, nrows)
    uu, vv = np.meshgrid(u, v)  # (nrows, ncols)
    theta = (uu - width / 2.0) / r
    verts = np.column_stack(
        [
            (r * np.sin(theta)).ravel(),
            vv.ravel(),
            (r * (np.cos(theta) - 1.0)).ravel(),
        ]
    )
    normals = np.column_stack(
        [
            np.sin(theta).ravel(),
            np.zeros(theta.size),
            np.cos(theta).ravel(),
        ]
    )
    uv = np.column_stack([uu.ravel(), vv.ravel()])

    idx = np.arange(nrows * ncols).reshape(nrows, ncols)
    q00 = idx[:-1, :-1].ravel()
    q01 = idx[:-1, 1:].ravel()
    q10 = idx[1:, :-1].ravel()
    q11 = idx[1:, 1:].ravel()
    tris = np.concatenate(
        [
            np.column_stack([q00, q01, q11]),
            np.column_stack([q00, q11, q10]),
        ]
    )
    return SurfaceModel(verts, tris, normals, uv)


# ---------------------------------------------------------------------------
# Exclusions and regions


@dataclass(frozen=True, eq=False)
class ExclusionZone:
    """A landmark keep-out polygon in surface uv, mm."""

    boundary: np.ndarray
    label: str = "custom"

    def __post_init__(self):
        poly = geometry.as_polygon(self.boundary)
        if self.label not in EXCLUSION_LABELS:
            raise RegionError(
                f"exclusion label {self.label!r} not in {EXCLUSION_LABELS}"
            )
        if not geometry.polygon_is_simple(poly):
            raise RegionError(f"exclusion {self.label!r} polygon self-intersects")
        if geometry.polygon_area(poly) <= 0.0:
            raise RegionError(f"exclusion {self.label!r} has zero area")
        poly.flags.writeable = False
        object.__setattr__(self, "boundary", poly)


class ZeroOperableAreaWarning(UserWarning):
    """Region is valid but has nothing left to treat."""


@dataclass(frozen=True, eq=False)
class Region:
    """Operable treatment region on a surface.

    selection: one or more simple polygons in uv (mm) within the surface's
    parameterization domain. exclusions are dilated by `margin` (Euclidean
    disc dilation) before subtraction. operable_area is computed on
    construction by rasterization at DEFAULT_PIXEL_SIZE_MM.
    """

    surface: SurfaceModel
    selection: tuple
    exclusions: tuple = ()
    margin: float = DEFAULT_MARGIN_MM
    operable_area: float = field(init=False, default=0.0)
    selection_area: float = field(init=False, default=0.0)

    def __post_init__(self):
        if self.margin < 0:
            raise RegionError(f"margin must be >= 0, got {self.margin}")
        surface = self.surface.ensure_uv()
        polys = self.selection
        if isinstance(polys, np.ndarray) and polys.ndim == 2:
            polys = (polys,)
        polys = tuple(geometry.as_polygon(p) for p in polys)
        if not polys:
            raise RegionError("selection needs at least one polygon")
        for i, p in enumerate(polys):
            if not geometry.polygon_is_simple(p):
                raise RegionError(f"selection polygon {i} self-intersects")
            p.flags.writeable = False
        exclusions = tuple(self.exclusions)
        for e in exclusions:
            if not isinstance(e, ExclusionZone):
                raise RegionError(f"exclusions must be ExclusionZone, got {type(e)}")

        u0, v0, u1, v1 = surface.uv_bounds()
        su0, sv0, su1, sv1 = geometry.polygons_bounds(polys)
        tol = 1e-6
        if su0 < u0 - tol or sv0 < v0 - tol or su1 > u1 + tol or sv1 > v1 + tol:
            raise RegionError(
                f"selection extends outside the surface uv domain "
                f"[{u0}, {u1}] x [{v0}, {v1}]"
            )

        object.__setattr__(self, "surface", surface)
        object.__setattr__(self, "selection", polys)
        object.__setattr__(self, "exclusions", exclusions)
        object.__setattr__(self, "_raster_cache", {})

        origin, grid = self.label_grid(DEFAULT_PIXEL_SIZE_MM)
        px_area = DEFAULT_PIXEL_SIZE_MM**2
        operable = float(np.count_nonzero(grid == PX_OPERABLE) * px_area)
        selected = float(np.count_nonzero(grid != PX_OUTSIDE) * px_area)
        object.__setattr__(self, "operable_area", operable)
        object.__setattr__(self, "selection_area", selected)
        if operable == 0.0:
            warnings.warn(
                "region has zero operable area (selection entirely excluded); "
                "valid but unplannable",
                ZeroOperableAreaWarning,
                stacklevel=2,
            )

    @property
    def plannable(self) -> bool:
        return self.operable_area > 0.0

    def bounds(self) -> tuple[float, float, float, float]:
        return geometry.polygons_bounds(self.selection)

    def label_grid(self, pixel_size: float) -> tuple[np.ndarray, np.ndarray]:
        """Classified pixel grid over the selection bounding box.

        Returns (origin, grid) where origin is the uv of the grid's min
        corner and grid[row, col] holds PX_OUTSIDE / PX_OPERABLE /
        PX_EXCLUDED for the pixel centered at
        origin + ((col + 0.5) px, (row + 0.5) px). Cached per pixel_size.
        """
        if pixel_size <= 0:
            raise ValueError(f"pixel_size must be positive, got {pixel_size}")
        key = float(pixel_size)
        cached = self._raster_cache.get(key)
        if cached is not None:
            return cached

        u0, v0, u1, v1 = self.bounds()
        width = max(1, int(np.ceil((u1 - u0) / pixel_size - 1e-9)))
        height = max(1, int(np.ceil((v1 - v0) / pixel_size - 1e-9)))
        origin = np.array([u0, v0])
        grid = np.zeros((height, width), dtype=np.uint8)

        ucenters = u0 + (np.arange(width) + 0.5) * pixel_size
        vcenters = v0 + (np.arange(height) + 0.5) * pixel_size

        # block rows so the (pixels x edges) broadcasts stay small
        block = max(1, int(4_000_000 // max(width, 1)))
        for r0 in range(0, height, block):
            r1 = min(height, r0 + block)
            uu, vv = np.meshgrid(ucenters, vcenters[r0:r1])
            pts = np.column_stack([uu.ravel(), vv.ravel()])
            inside = geometry.points_in_any(pts, self.selection)
            grid[r0:r1] = np.where(inside, PX_OPERABLE, PX_OUTSIDE).reshape(
                r1 - r0, width
            )

        for zone in self.exclusions:
            eb = geometry.polygons_bounds([zone.boundary])
            pad = self.margin + pixel_size
            c0 = max(0, int(np.floor((eb[0] - pad - u0) / pixel_size)))
            c1 = min(width, int(np.ceil((eb[2] + pad - u0) / pixel_size)) + 1)
            r0 = max(0, int(np.floor((eb[1] - pad - v0) / pixel_size)))
            r1 = min(height, int(np.ceil((eb[3] + pad - v0) / pixel_size)) + 1)
            if c0 >= c1 or r0 >= r1:
                continue
            for rb0 in range(r0, r1, max(1, block)):
                rb1 = min(r1, rb0 + max(1, block))
                uu, vv = np.meshgrid(ucenters[c0:c1], vcenters[rb0:rb1])
                pts = np.column_stack([uu.ravel(), vv.ravel()])
                d = geometry.signed_distance(pts, zone.boundary)
                hit = (d <= self.margin).reshape(rb1 - rb0, c1 - c0)
                sub = grid[rb0:rb1, c0:c1]
                sub[hit & (sub == PX_OPERABLE)] = PX_EXCLUDED

        grid.flags.writeable = False
        origin.flags.writeable = False
        self._raster_cache[key] = (origin, grid)
        return origin, grid

    def clearance_to_exclusions(self, uv_points: np.ndarray) -> np.ndarray:
        """Distance from each uv point to the nearest (undilated) exclusion.

        Infinite when the region has no exclusions. Footprint safety for a
        spot of radius r_spot demands clearance >= r_spot + margin.
        """
        uv_points = np.atleast_2d(np.asarray(uv_points, dtype=np.float64))
        if not self.exclusions:
            return np.full(uv_points.shape[0], np.inf)
        return geometry.distance_to_any(
            uv_points, [z.boundary for z in self.exclusions]
        )

    def distance_to_selection_boundary(self, uv_points: np.ndarray) -> np.ndarray:
        """Signed-style distance: positive depth inside selection, -inf outside.

        Used by the `inside` boundary policy: a disc of radius r fits iff
        the returned depth >= r.
        """
        uv_points = np.atleast_2d(np.asarray(uv_points, dtype=np.float64))
        depth = np.full(uv_points.shape[0], -np.inf)
        for poly in self.selection:
            d = geometry.signed_distance(uv_points, poly)
            depth = np.maximum(depth, -d)
        return depth


def define_region(
    surface: SurfaceModel,
    selection,
    exclusions=(),
    margin: float = DEFAULT_MARGIN_MM,
) -> Region:
    """Build a Region; thin constructor wrapper kept for API symmetry."""
    return Region(surface, selection, tuple(exclusions), margin)


# ---------------------------------------------------------------------------
# Mesh file I/O (ASCII PLY and Wavefront OBJ)


def load_mesh(path: str) -> SurfaceModel:
    """Read a triangle mesh from an ASCII PLY or OBJ file.

    Normals are taken from the file when present (and unit-valid),
    otherwise computed area-weighted. PLY uv comes from property pairs
    (u, v) or (s, t).
    """
    if not os.path.exists(path):
        raise MeshError(f"no such file: {path}")
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        first = fh.readline().strip()
        fh.seek(0)
        if first == "ply":
            return _load_ply(fh, path)
        if path.lower().endswith(".obj") or first.startswith(("v ", "#", "vn ")):
            return _load_obj(fh, path)
    raise MeshError(f"unsupported mesh format: {path} (want ASCII PLY or OBJ)")


def _load_ply(fh, path: str) -> SurfaceModel:
    line = fh.readline().strip()
    if line != "ply":
        raise MeshError("missing 'ply' magic", element="header")
    elements: list[tuple[str, int, list[str]]] = []
    fmt = None
    while True:
        raw = fh.readline()
        if not raw:
            raise MeshError("unexpected EOF in header", element="header")
        line = raw.strip()
        if not line or line.startswith("comment"):
            continue
        if line == "end_header":
            break
        parts = line.split()
        if parts[0] == "format":
            fmt = parts[1]
            if fmt != "ascii":
                raise MeshError(
                    f"only ASCII PLY is supported, got format {fmt!r}",
                    element="header",
                )
        elif parts[0] == "element":
            elements.append((parts[1], int(parts[2]), []))
        elif parts[0] == "property":
            if not elements:
                raise MeshError("property before any element", element="header")
            if parts[1] == "list":
                elements[-1][2].append(f"list:{parts[-1]}")
            else:
                elements[-1][2].append(parts[-1])
    if fmt is None:
        raise MeshError("missing format line", element="header")

    verts = normals = uv = None
    faces: list[list[int]] = []
    for name, count, props in elements:
        rows = []
        for i in range(count):
            raw = fh.readline()
            if not raw:
                raise MeshError(f"unexpected EOF reading {name} {i}", element=f"{name} {i}")
            rows.append(raw.split())
        if name == "vertex":
            idx = {p: j for j, p in enumerate(props)}
            for axis in ("x", "y", "z"):
                if axis not in idx:
                    raise MeshError(f"vertex element lacks property {axis!r}", element="header")
            try:
                data = np.array(
                    [[float(t) for t in row] for row in rows], dtype=np.float64
                )
            except ValueError as exc:
                raise MeshError(f"bad vertex value ({exc})", element="vertex data") from exc
            if data.shape[1] != len(props):
                raise MeshError(
                    f"vertex rows have {data.shape[1]} values, header lists {len(props)}",
                    element="vertex data",
                )
            verts = data[:, [idx["x"], idx["y"], idx["z"]]]
            if all(a in idx for a in ("nx", "ny", "nz")):
                normals = data[:, [idx["nx"], idx["ny"], idx["nz"]]]
            for ua, va in (("u", "v"), ("s", "t")):
                if ua in idx and va in idx:
                    uv = data[:, [idx[ua], idx[va]]]
                    break
        elif name == "face":
            for i, row in enumerate(rows):
                try:
                    n = int(row[0])
                    indices = [int(t) for t in row[1 : 1 + n]]
                except (ValueError, IndexError) as exc:
                    raise MeshError(f"bad face row ({exc})", element=f"face {i}") from exc
                if n != 3:
                    raise MeshError(
                        f"has {n} vertices; only triangles supported",
                        element=f"face {i}",
                    )
                faces.append(indices)
        # other elements: parsed positionally above and ignored

    if verts is None:
        raise MeshError("PLY has no vertex element", element="header")
    if not faces:
        raise MeshError(f"PLY {path} has no faces (point cloud?); meshes need triangles")
    return SurfaceModel(verts, np.array(faces, dtype=np.int64), normals, uv)


def _load_obj(fh, path: str) -> SurfaceModel:
    positions: list[list[float]] = []
    file_normals: list[list[float]] = []
    texcoords: list[list[float]] = []
    face_refs: list[list[tuple[int, int | None, int | None]]] = []
    for lineno, raw in enumerate(fh, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = parts[0]
        try:
            if tag == "v":
                positions.append([float(parts[1]), float(parts[2]), float(parts[3])])
            elif tag == "vn":
                file_normals.append([float(parts[1]), float(parts[2]), float(parts[3])])
            elif tag == "vt":
                texcoords.append([float(parts[1]), float(parts[2])])
            elif tag == "f":
                refs = [_parse_obj_ref(tok) for tok in parts[1:]]
                if len(refs) != 3:
                    raise MeshError(
                        f"has {len(refs)} vertices; only triangles supported",
                        element=f"line {lineno}",
                    )
                face_refs.append(refs)
            # unknown tags (o, g, s, usemtl, ...) are ignored
        except (ValueError, IndexError) as exc:
            raise MeshError(f"cannot parse {line!r} ({exc})", element=f"line {lineno}") from exc

    if not positions:
        raise MeshError(f"OBJ {path} defines no vertices")
    if not face_refs:
        raise MeshError(f"OBJ {path} defines no faces")

    # re-index (v, vt, vn) combos so normals/uv follow their face references
    combo_index: dict[tuple[int, int | None, int | None], int] = {}
    verts, normals, uvs, tris = [], [], [], []
    has_n = bool(file_normals)
    has_t = bool(texcoords)
    for fi, refs in enumerate(face_refs):
        tri = []
        for vi, ti, ni in refs:
            if not (1 <= vi <= len(positions)):
                raise MeshError(
                    f"vertex index {vi} out of range ({len(positions)} vertices)",
                    element=f"face {fi}",
                )
            if ni is not None and not (1 <= ni <= len(file_normals)):
                raise MeshError(
                    f"normal index {ni} out of range", element=f"face {fi}"
                )
            if ti is not None and not (1 <= ti <= len(texcoords)):
                raise MeshError(
                    f"texcoord index {ti} out of range", element=f"face {fi}"
                )
            key = (vi, ti, ni)
            if key not in combo_index:
                combo_index[key] = len(verts)
                verts.append(positions[vi - 1])
                if has_n:
                    normals.append(
                        file_normals[ni - 1] if ni is not None else [0.0, 0.0, 0.0]
                    )
                if has_t:
                    uvs.append(texcoords[ti - 1] if ti is not None else [0.0, 0.0])
            tri.append(combo_index[key])
        tris.append(tri)

    normals_arr = np.array(normals) if has_n and all(
        np.linalg.norm(n) > 0 for n in normals
    ) else None
    uv_arr = np.array(uvs) if has_t else None
    return SurfaceModel(
        np.array(verts), np.array(tris, dtype=np.int64), normals_arr, uv_arr
    )


def _parse_obj_ref(token: str) -> tuple[int, int | None, int | None]:
    fields = token.split("/")
    vi = int(fields[0])
    ti = int(fields[1]) if len(fields) > 1 and fields[1] else None
    ni = int(fields[2]) if len(fields) > 2 and fields[2] else None
    if vi < 0 or (ti is not None and ti < 0) or (ni is not None and ni < 0):
        raise ValueError("negative OBJ indices not supported")
    return vi, ti, ni


def save_mesh(surface: SurfaceModel, path: str) -> None:
    """Write a mesh as ASCII PLY or OBJ (chosen by extension).

    Floats are written with repr, which round-trips float64 exactly, so
    save -> load reproduces vertex data bit-for-bit.
    """
    ext = os.path.splitext(path)[1].lower()
    if ext == ".obj":
        _save_obj(surface, path)
    elif ext == ".ply":
        _save_ply(surface, path)
    else:
        raise MeshError(f"unsupported mesh extension {ext!r} (want .ply or .obj)")


def _save_ply(surface: SurfaceModel, path: str) -> None:
    has_uv = surface.uv is not None
    lines = ["ply", "format ascii 1.0", f"element vertex {len(surface.vertices)}"]
    lines += [f"property double {a}" for a in ("x", "y", "z", "nx", "ny", "nz")]
    if has_uv:
        lines += ["property double u", "property double v"]
    lines += [
        f"element face {len(surface.triangles)}",
        "property list uchar int vertex_indices",
        "end_header",
    ]
    for i in range(len(surface.vertices)):
        row = list(surface.vertices[i]) + list(surface.vertex_normals[i])
        if has_uv:
            row += list(surface.uv[i])
        lines.append(" ".join(repr(float(x)) for x in row))
    for tri in surface.triangles:
        lines.append(f"3 {tri[0]} {tri[1]} {tri[2]}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _save_obj(surface: SurfaceModel, path: str) -> None:
    has_uv = surface.uv is not None
    out = []
    for v in surface.vertices:
        out.append(f"v {repr(float(v[0]))} {repr(float(v[1]))} {repr(float(v[2]))}")
    for n in surface.vertex_normals:
        out.append(f"vn {repr(float(n[0]))} {repr(float(n[1]))} {repr(float(n[2]))}")
    if has_uv:
        for t in surface.uv:
            out.append(f"vt {repr(float(t[0]))} {repr(float(t[1]))}")
    for tri in surface.triangles:
        a, b, c = (int(tri[0]) + 1, int(tri[1]) + 1, int(tri[2]) + 1)
        if has_uv:
            out.append(f"f {a}/{a}/{a} {b}/{b}/{b} {c}/{c}/{c}")
        else:
            out.append(f"f {a}//{a} {b}//{b} {c}//{c}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(out) + "\n")
