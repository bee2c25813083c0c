"""Raster ground truth for every area metric.

All scoring reduces to one primitive: stamp each shot's footprint (a disc
in arc-length uv) onto a pixel grid and count per-pixel hits. A pixel is
hit iff its center lies within spot_radius of the shot's uv center
(point sampling, unbiased as pixel_size -> 0). Union, exactly-once,
overlap, omission and dose statistics all fall out of the hit counts.

Shot centers are ALWAYS re-projected from 3D to uv here, so a plan that
went through JSON serialization scores bit-identically to the in-process
object: both paths hand coverage the same xyz.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateResolutionError
from .planner import TreatmentPlan
from .surface import PX_EXCLUDED, PX_OPERABLE, PX_OUTSIDE, Region

DEFAULT_PIXEL_SIZE_MM = 0.05

HEATMAP_MAGIC = b"LBHM"  # little-endian layer header, see write_heatmap_layer

_SHOT_CHUNK = 512  # stamping block size; bounds the (K, w, w) broadcast


@dataclass(frozen=True, eq=False)
class RasterMask:
    """Classified pixel grid over a region's selection bounding box.

    grid[row, col] in {PX_OUTSIDE, PX_OPERABLE, PX_EXCLUDED}; pixel (row,
    col) is centered at origin + ((col + 0.5) px, (row + 0.5) px).
    """

    origin: np.ndarray  # (2,) uv mm of the grid's min corner
    pixel_size: float
    grid: np.ndarray  # (H, W) uint8 labels

    @property
    def pixel_area(self) -> float:
        return self.pixel_size * self.pixel_size

    @property
    def operable_area(self) -> float:
        return float(np.count_nonzero(self.grid == PX_OPERABLE) * self.pixel_area)

    @property
    def shape(self) -> tuple:
        return self.grid.shape


def rasterize(region: Region, pixel_size: float = DEFAULT_PIXEL_SIZE_MM) -> RasterMask:
    """Region's label grid as a RasterMask (cached per pixel_size).

    Raises DegenerateResolutionError when the resolution is too coarse to
    see any of a genuinely nonzero operable area.
    """
    origin, grid = region.label_grid(pixel_size)
    if region.operable_area > 0 and not np.any(grid == PX_OPERABLE):
        raise DegenerateResolutionError(
            f"pixel_size {pixel_size} mm leaves zero operable pixels "
            f"(operable area {region.operable_area:.1f} mm^2)"
        )
    return RasterMask(origin=origin, pixel_size=float(pixel_size), grid=grid)


def stamp_hits(mask: RasterMask, centers_uv: np.ndarray, radius: float) -> np.ndarray:
    """Per-pixel hit counts from disc stamping. Returns (H, W) int32.

    Each shot touches only a (2w+1)^2 window around its center pixel, so
    shots are processed in blocks with a broadcasted in-disc test and
    accumulated via bincount on flat indices.
    """
    h, w = mask.grid.shape
    counts = np.zeros(h * w, dtype=np.int64)
    centers_uv = np.asarray(centers_uv, dtype=np.float64).reshape(-1, 2)
    if centers_uv.shape[0] == 0:
        return counts.reshape(h, w).astype(np.int32)

    px = mask.pixel_size
    rr = radius / px  # radius in pixel units
    # fractional pixel-index coordinates of shot centers: pixel i has its
    # center at index i, i.e. uv = origin + (i + 0.5) px
    ci = (centers_uv[:, 0] - mask.origin[0]) / px - 0.5
    cj = (centers_uv[:, 1] - mask.origin[1]) / px - 0.5
    half = int(np.ceil(rr)) + 1
    offs = np.arange(-half, half + 1)

    for s in range(0, centers_uv.shape[0], _SHOT_CHUNK):
        ci_b = ci[s : s + _SHOT_CHUNK]
        cj_b = cj[s : s + _SHOT_CHUNK]
        base_col = np.round(ci_b).astype(np.int64)
        base_row = np.round(cj_b).astype(np.int64)
        cols = base_col[:, None] + offs[None, :]  # (K, 2h+1)
        rows = base_row[:, None] + offs[None, :]
        du = cols - ci_b[:, None]  # pixel-unit offsets from true center
        dv = rows - cj_b[:, None]
        inside = (
            du[:, None, :] ** 2 + dv[:, :, None] ** 2 <= rr * rr
        )  # (K, rows, cols)
        valid_c = (cols >= 0) & (cols < w)
        valid_r = (rows >= 0) & (rows < h)
        keep = inside & valid_r[:, :, None] & valid_c[:, None, :]
        flat = rows[:, :, None] * w + cols[:, None, :]
        counts += np.bincount(flat[keep], minlength=h * w)

    return counts.reshape(h, w).astype(np.int32)


@dataclass(frozen=True)
class CoverageReport:
    """Area bookkeeping over the operable region.

    U: operable area at this raster's resolution. phi_union: area hit at
    least once. coverage_pct scores the union metric (the exactly-once
    alternative stays available as a field); `metric` records the choice.
    """

    U: float
    phi_union: float
    exactly_once: float
    multi: float
    uncovered: float
    coverage_pct: float
    shots: int
    duration: float
    pixel_size: float
    metric: str = "union"

    def to_json(self) -> dict:
        return {
            "U_mm2": self.U,
            "phi_union_mm2": self.phi_union,
            "exactly_once_mm2": self.exactly_once,
            "multi_mm2": self.multi,
            "uncovered_mm2": self.uncovered,
            "coverage_pct": self.coverage_pct,
            "shots": self.shots,
            "duration_s": self.duration,
            "pixel_size_mm": self.pixel_size,
            "metric": self.metric,
        }

    @staticmethod
    def from_json(doc: dict) -> "CoverageReport":
        return CoverageReport(
            U=float(doc["U_mm2"]),
            phi_union=float(doc["phi_union_mm2"]),
            exactly_once=float(doc["exactly_once_mm2"]),
            multi=float(doc["multi_mm2"]),
            uncovered=float(doc["uncovered_mm2"]),
            coverage_pct=float(doc["coverage_pct"]),
            shots=int(doc["shots"]),
            duration=float(doc["duration_s"]),
            pixel_size=float(doc["pixel_size_mm"]),
            metric=str(doc.get("metric", "union")),
        )


def _hit_counts(
    region: Region, plan: TreatmentPlan, pixel_size: float
) -> tuple[RasterMask, np.ndarray]:
    mask = rasterize(region, pixel_size)
    if len(plan):
        uv = region.surface.project(plan.centers)
        counts = stamp_hits(mask, uv, plan.laser.spot_radius)
    else:
        counts = np.zeros(mask.grid.shape, dtype=np.int32)
    return mask, counts


def coverage_report(
    region: Region, plan: TreatmentPlan, pixel_size: float = DEFAULT_PIXEL_SIZE_MM
) -> CoverageReport:
    """Score a plan against a region. All areas in mm^2.

    U, phi_union, exactly_once, multi and uncovered are counted over
    operable pixels only, so exactly_once + multi + uncovered = U holds
    exactly in raster arithmetic.
    """
    mask, counts = _hit_counts(region, plan, pixel_size)
    op = mask.grid == PX_OPERABLE
    pa = mask.pixel_area
    n_op = int(np.count_nonzero(op))
    hits = counts[op]
    once = int(np.count_nonzero(hits == 1))
    multi = int(np.count_nonzero(hits >= 2))
    union = once + multi
    u_area = n_op * pa
    return CoverageReport(
        U=u_area,
        phi_union=union * pa,
        exactly_once=once * pa,
        multi=multi * pa,
        uncovered=(n_op - union) * pa,
        coverage_pct=(100.0 * union / n_op) if n_op else 0.0,
        shots=len(plan),
        duration=plan.duration,
        pixel_size=float(pixel_size),
    )


@dataclass(frozen=True, eq=False)
class DoseMap:
    """Cumulative fluence per pixel plus summary stats over operable pixels."""

    origin: np.ndarray
    pixel_size: float
    counts: np.ndarray  # (H, W) int32 hit counts
    dose: np.ndarray  # (H, W) float64, counts x fluence
    dose_min: float
    dose_mean: float
    dose_max: float
    overdose_area: float  # mm^2 of operable pixels hit >= 2x


def dose_map(
    region: Region, plan: TreatmentPlan, pixel_size: float = DEFAULT_PIXEL_SIZE_MM
) -> DoseMap:
    mask, counts = _hit_counts(region, plan, pixel_size)
    dose = counts * float(plan.laser.fluence)
    op = mask.grid == PX_OPERABLE
    op_dose = dose[op]
    overdose = int(np.count_nonzero(counts[op] >= 2))
    return DoseMap(
        origin=mask.origin,
        pixel_size=mask.pixel_size,
        counts=counts,
        dose=dose,
        dose_min=float(op_dose.min()) if op_dose.size else 0.0,
        dose_mean=float(op_dose.mean()) if op_dose.size else 0.0,
        dose_max=float(op_dose.max()) if op_dose.size else 0.0,
        overdose_area=overdose * mask.pixel_area,
    )


# ---------------------------------------------------------------------------
# Export formats


def write_pgm(path: str, values: np.ndarray, scale_max: float | None = None) -> None:
    """Binary PGM (P5), 8-bit. Values scale linearly: 0 -> 0 and
    scale_max (default: the array max) -> 255, clipped."""
    arr = np.asarray(values, dtype=np.float64)
    top = float(arr.max()) if scale_max is None else float(scale_max)
    if top <= 0:
        top = 1.0
    pix = np.clip(np.round(arr / top * 255.0), 0, 255).astype(np.uint8)
    header = f"P5\n{pix.shape[1]} {pix.shape[0]}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header + pix.tobytes())


def mask_to_pgm(mask: RasterMask, path: str) -> None:
    """Label grid as PGM: outside 0, excluded 128, operable 255."""
    lut = np.zeros(256, dtype=np.uint8)
    lut[PX_OPERABLE] = 255
    lut[PX_EXCLUDED] = 128
    lut[PX_OUTSIDE] = 0
    pix = lut[mask.grid]
    header = f"P5\n{pix.shape[1]} {pix.shape[0]}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header + pix.tobytes())


def write_heatmap_layer(counts: np.ndarray, pixel_size: float) -> bytes:
    """Compact binary hit-count layer, little-endian throughout:

        u32 width, u32 height, f32 pixel_size_mm,
        then width*height u32 counts, row-major from the grid's min-v row.

    This is the byte layout the heatmap endpoint serves and the UI decodes.
    """
    counts = np.asarray(counts)
    h, w = counts.shape
    header = struct.pack("<IIf", w, h, float(pixel_size))
    return header + np.ascontiguousarray(counts, dtype="<u4").tobytes()


def read_heatmap_layer(blob: bytes) -> tuple[np.ndarray, float]:
    w, h, px = struct.unpack_from("<IIf", blob, 0)
    counts = np.frombuffer(blob, dtype="<u4", offset=12, count=w * h).reshape(h, w)
    return counts.astype(np.int64), float(px)
