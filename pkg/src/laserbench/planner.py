"""Treatment planning: spot lattices, boustrophedon trajectories, validation.

The planner works in the surface's arc-length uv parameterization, where
non-overlap is a plain Euclidean constraint: two 6mm spots don't overlap
iff their uv centers are >= 6mm apart. Centers are lifted to 3D only when
the trajectory is assembled.

Everything here is deterministic; stochastic execution (human hands, robot
pose noise) lives in operator_sim.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import ReachabilityError, RegionError, WorkbenchError
from .surface import Region

# Non-overlap slack absorbing float noise in lattice arithmetic, mm.
OVERLAP_EPS = 1e-6

PLAN_FORMAT = "treatment-plan/1"

PATTERNS = ("hex", "square")
BOUNDARY_POLICIES = ("inside", "center-inside")
SOURCES = ("robot", "human")


@dataclass(frozen=True)
class LaserSpec:
    """Laser spot geometry and energy; defaults follow a Q-switched
    1064nm protocol: 6mm spot, 600 mJ/cm^2."""

    wavelength: float = 1064.0  # nm
    spot_diameter: float = 6.0  # mm
    fluence: float = 600.0  # mJ/cm^2

    def __post_init__(self):
        if self.spot_diameter <= 0:
            raise ValueError(f"spot_diameter must be > 0, got {self.spot_diameter}")
        if self.fluence <= 0:
            raise ValueError(f"fluence must be > 0, got {self.fluence}")

    @property
    def spot_radius(self) -> float:
        return self.spot_diameter / 2.0


@dataclass(frozen=True)
class KinematicModel:
    """Timing and workspace model for the arm: constant travel speed
    between shots, fixed dwell per shot, spherical reach from the base."""

    travel_speed: float  # mm/s
    dwell: float  # s
    reach: float = 850.0  # mm, workspace radius from the base frame origin

    def __post_init__(self):
        if self.travel_speed <= 0 or self.dwell <= 0 or self.reach <= 0:
            raise ValueError("KinematicModel fields must all be positive")


@dataclass(frozen=True)
class Shot:
    center: np.ndarray  # (3,) mm, on the surface
    surface_normal: np.ndarray  # (3,) unit
    emit_time: float  # s from plan start


@dataclass(frozen=True, eq=False)
class TreatmentPlan:
    """Ordered shot sequence with pose and timing.

    Stored struct-of-arrays for vectorized scoring; the `shots` property
    materializes Shot records on demand. Immutable after construction.
    """

    centers: np.ndarray  # (N, 3)
    normals: np.ndarray  # (N, 3)
    emit_times: np.ndarray  # (N,)
    standoff: float
    source: str
    laser: LaserSpec
    warnings: tuple = ()

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=np.float64).reshape(-1, 3)
        normals = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)
        times = np.asarray(self.emit_times, dtype=np.float64).reshape(-1)
        if not (len(centers) == len(normals) == len(times)):
            raise ValueError("centers, normals and emit_times must have equal length")
        if not (np.all(np.isfinite(centers)) and np.all(np.isfinite(normals))):
            raise ValueError("plan poses must be finite")
        if self.source not in SOURCES:
            raise ValueError(f"source must be one of {SOURCES}, got {self.source!r}")
        for arr in (centers, normals, times):
            arr.flags.writeable = False
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "emit_times", times)
        object.__setattr__(self, "warnings", tuple(self.warnings))

    def __len__(self) -> int:
        return self.centers.shape[0]

    @property
    def n_shots(self) -> int:
        return self.centers.shape[0]

    @property
    def duration(self) -> float:
        """Seconds from start to the last emission; 0 for an empty plan."""
        return float(self.emit_times[-1]) if len(self) else 0.0

    @property
    def shots(self) -> list[Shot]:
        return [
            Shot(self.centers[i], self.normals[i], float(self.emit_times[i]))
            for i in range(len(self))
        ]

    def emitter_positions(self) -> np.ndarray:
        return self.centers + self.standoff * self.normals


class EmptyPlanWarning(UserWarning):
    """No lattice site fits the region under the requested policy."""


# ---------------------------------------------------------------------------
# Lattice construction


def plan_lattice(
    region: Region,
    laser: LaserSpec,
    pattern: str = "hex",
    boundary_policy: str = "inside",
) -> np.ndarray:
    """Non-overlapping spot centers in uv, row-major bottom-to-top.

    hex: pitch = spot_diameter within rows, rows (sqrt(3)/2) * diameter
    apart, odd rows staggered half a pitch. square: both pitches equal to
    the diameter. The lattice is centered in the admissible band so the
    residual space splits evenly, then filtered against the actual
    selection/exclusion geometry:

      inside         whole footprint within the operable region
      center-inside  only the center needs to be operable

    Returns (K, 2) centers; empty (0, 2) with an EmptyPlanWarning when
    nothing fits.
    """
    if pattern not in PATTERNS:
        raise ValueError(f"pattern must be one of {PATTERNS}, got {pattern!r}")
    if boundary_policy not in BOUNDARY_POLICIES:
        raise ValueError(
            f"boundary_policy must be one of {BOUNDARY_POLICIES}, got {boundary_policy!r}"
        )
    if not region.plannable:
        raise RegionError("region has zero operable area; nothing to plan")

    d = laser.spot_diameter
    r = laser.spot_radius
    u0, v0, u1, v1 = region.bounds()
    inset = r if boundary_policy == "inside" else 0.0
    lo_u, hi_u = u0 + inset, u1 - inset
    lo_v, hi_v = v0 + inset, v1 - inset

    candidates = _lattice_candidates(lo_u, hi_u, lo_v, hi_v, d, pattern)
    if candidates.shape[0]:
        depth = region.distance_to_selection_boundary(candidates)
        clearance = region.clearance_to_exclusions(candidates)
        if boundary_policy == "inside":
            keep = (depth >= r - 1e-9) & (clearance >= r + region.margin - 1e-9)
        else:
            keep = (depth > 0.0) & (clearance > region.margin)
        candidates = candidates[keep]

    if candidates.shape[0] == 0:
        warnings.warn(
            f"no {laser.spot_diameter}mm spot fits the region under "
            f"{boundary_policy!r} policy",
            EmptyPlanWarning,
            stacklevel=2,
        )
        return np.zeros((0, 2))
    return candidates


def _lattice_candidates(
    lo_u: float, hi_u: float, lo_v: float, hi_v: float, d: float, pattern: str
) -> np.ndarray:
    span_u = hi_u - lo_u
    span_v = hi_v - lo_v
    if span_u < -1e-9 or span_v < -1e-9:
        return np.zeros((0, 2))
    dy = d * np.sqrt(3.0) / 2.0 if pattern == "hex" else d

    n_rows = int(np.floor(span_v / dy + 1e-9)) + 1
    v_off = (span_v - (n_rows - 1) * dy) / 2.0
    n_cols = int(np.floor(span_u / d + 1e-9)) + 1
    u_off = (span_u - (n_cols - 1) * d) / 2.0

    rows = []
    for i in range(n_rows):
        v = lo_v + v_off + i * dy
        stagger = (d / 2.0) if (pattern == "hex" and i % 2 == 1) else 0.0
        us = lo_u + u_off + stagger + d * np.arange(n_cols)
        us = us[us <= hi_u + 1e-9]
        if us.size:
            rows.append(np.column_stack([us, np.full(us.size, v)]))
    if not rows:
        return np.zeros((0, 2))
    return np.vstack(rows)


# ---------------------------------------------------------------------------
# Trajectory assembly


def boustrophedon_order(centers_uv: np.ndarray, row_tol: float = 1e-6) -> np.ndarray:
    """Serpentine visiting order over uv centers.

    Rows are groups of equal v (within row_tol), visited bottom-to-top;
    u ascends on even rows and descends on odd ones, so consecutive rows
    join at the near end.
    """
    centers_uv = np.asarray(centers_uv, dtype=np.float64)
    if centers_uv.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    order = np.lexsort((centers_uv[:, 0], centers_uv[:, 1]))
    v_sorted = centers_uv[order, 1]
    row_breaks = np.flatnonzero(np.diff(v_sorted) > row_tol)
    starts = np.concatenate([[0], row_breaks + 1])
    ends = np.concatenate([row_breaks + 1, [len(order)]])
    out = []
    for row_idx, (s, e) in enumerate(zip(starts, ends)):
        chunk = order[s:e]
        out.append(chunk if row_idx % 2 == 0 else chunk[::-1])
    return np.concatenate(out)


def plan_trajectory(
    centers_uv: np.ndarray,
    region: Region,
    laser: LaserSpec,
    kin: KinematicModel,
    standoff: float,
    source: str = "robot",
    lattice_warnings: tuple = (),
) -> TreatmentPlan:
    """Order centers serpentine, lift to 3D, attach the timing model.

    emit_time[0] = dwell; emit_time[i] = emit_time[i-1] + dwell +
    emitter_travel/travel_speed, with emitter poses at `standoff` along
    the local surface normal. Raises ReachabilityError when any emitter
    pose leaves the arm's spherical workspace (base at the frame origin).
    """
    centers_uv = np.asarray(centers_uv, dtype=np.float64).reshape(-1, 2)
    if centers_uv.shape[0] == 0:
        raise RegionError("cannot build a trajectory from zero centers")

    order = boustrophedon_order(centers_uv)
    ordered = centers_uv[order]
    xyz, normals = region.surface.lift(ordered)
    emitters = xyz + standoff * normals

    dists = np.linalg.norm(np.diff(emitters, axis=0), axis=1)
    times = kin.dwell + np.concatenate([[0.0], np.cumsum(kin.dwell + dists / kin.travel_speed)])

    radii = np.linalg.norm(emitters, axis=1)
    over = np.flatnonzero(radii > kin.reach)
    if over.size:
        raise ReachabilityError(
            f"{over.size} emitter pose(s) exceed reach {kin.reach} mm "
            f"(max {radii.max():.1f} mm)",
            shot_indices=[int(i) for i in over],
        )

    return TreatmentPlan(
        centers=xyz,
        normals=normals,
        emit_times=times,
        standoff=float(standoff),
        source=source,
        laser=laser,
        warnings=tuple(lattice_warnings),
    )


def plan_treatment(
    region: Region,
    laser: LaserSpec,
    kin: KinematicModel,
    standoff: float,
    pattern: str = "hex",
    boundary_policy: str = "inside",
) -> TreatmentPlan:
    """plan_lattice + plan_trajectory; empty lattices become empty plans
    carrying the warning instead of raising."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        centers = plan_lattice(region, laser, pattern, boundary_policy)
    msgs = tuple(str(w.message) for w in caught if issubclass(w.category, EmptyPlanWarning))
    if centers.shape[0] == 0:
        return TreatmentPlan(
            centers=np.zeros((0, 3)),
            normals=np.zeros((0, 3)),
            emit_times=np.zeros(0),
            standoff=float(standoff),
            source="robot",
            laser=laser,
            warnings=msgs,
        )
    return plan_trajectory(centers, region, laser, kin, standoff, "robot", msgs)


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Violation:
    kind: str  # non_overlap | footprint_outside | exclusion_clearance | standoff | time_order
    shots: tuple  # indices into the plan
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations

    def count(self, kind: str) -> int:
        return sum(1 for v in self.violations if v.kind == kind)

    def counts(self) -> dict:
        out: dict[str, int] = {}
        for v in self.violations:
            out[v.kind] = out.get(v.kind, 0) + 1
        return out

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "violations": [
                {"kind": v.kind, "shots": list(v.shots), "detail": v.detail}
                for v in self.violations
            ],
        }


def validate_plan(plan: TreatmentPlan, region: Region) -> ValidationReport:
    """Check a plan against the protocol constraints; violations are data.

    Non-overlap is enforced only for robot plans (the human arm is allowed
    to overlap); footprint containment and exclusion clearance are counted
    for every source so human error is reported, never dropped.
    """
    violations: list[Violation] = []
    n = len(plan)
    if n == 0:
        return ValidationReport(tuple(violations))

    uv = region.surface.project(plan.centers)
    r = plan.laser.spot_radius

    if plan.source == "robot":
        tree = cKDTree(uv)
        for i, j in sorted(tree.query_pairs(plan.laser.spot_diameter - OVERLAP_EPS)):
            dist = float(np.linalg.norm(uv[i] - uv[j]))
            violations.append(
                Violation(
                    "non_overlap",
                    (int(i), int(j)),
                    f"centers {dist:.6f} mm apart < {plan.laser.spot_diameter} mm",
                )
            )

    depth = region.distance_to_selection_boundary(uv)
    for i in np.flatnonzero(depth < r - 1e-9):
        violations.append(
            Violation(
                "footprint_outside",
                (int(i),),
                f"footprint extends {r - depth[i]:.3f} mm beyond the selection",
            )
        )

    clearance = region.clearance_to_exclusions(uv)
    need = r + region.margin
    for i in np.flatnonzero(clearance < need - 1e-9):
        violations.append(
            Violation(
                "exclusion_clearance",
                (int(i),),
                f"clearance {clearance[i]:.3f} mm < required {need:.3f} mm",
            )
        )

    norms = np.linalg.norm(plan.normals, axis=1)
    for i in np.flatnonzero(np.abs(norms - 1.0) > 1e-9):
        violations.append(
            Violation(
                "standoff",
                (int(i),),
                f"normal length {norms[i]:.9f} breaks the constant-standoff pose",
            )
        )

    dt = np.diff(plan.emit_times)
    for i in np.flatnonzero(dt < -1e-12):
        violations.append(
            Violation(
                "time_order",
                (int(i), int(i) + 1),
                f"emit_time decreases by {-dt[i]:.6g} s",
            )
        )

    return ValidationReport(tuple(violations))


# ---------------------------------------------------------------------------
# Wire format


def plan_to_json(plan: TreatmentPlan) -> dict:
    """Versioned JSON document; floats serialize via repr and so
    round-trip bit-exactly."""
    return {
        "format": PLAN_FORMAT,
        "source": plan.source,
        "standoff_mm": plan.standoff,
        "laser": {
            "wavelength_nm": plan.laser.wavelength,
            "spot_diameter_mm": plan.laser.spot_diameter,
            "fluence_mj_cm2": plan.laser.fluence,
        },
        "duration_s": plan.duration,
        "warnings": list(plan.warnings),
        "shots": [
            {
                "x": float(plan.centers[i, 0]),
                "y": float(plan.centers[i, 1]),
                "z": float(plan.centers[i, 2]),
                "nx": float(plan.normals[i, 0]),
                "ny": float(plan.normals[i, 1]),
                "nz": float(plan.normals[i, 2]),
                "t": float(plan.emit_times[i]),
            }
            for i in range(len(plan))
        ],
    }


def plan_from_json(doc: dict) -> TreatmentPlan:
    if not isinstance(doc, dict) or doc.get("format") != PLAN_FORMAT:
        raise WorkbenchError(
            f"not a {PLAN_FORMAT} document (format={doc.get('format')!r})"
        )
    laser = LaserSpec(
        wavelength=float(doc["laser"]["wavelength_nm"]),
        spot_diameter=float(doc["laser"]["spot_diameter_mm"]),
        fluence=float(doc["laser"]["fluence_mj_cm2"]),
    )
    shots = doc.get("shots", [])
    centers = np.array([[s["x"], s["y"], s["z"]] for s in shots], dtype=np.float64).reshape(-1, 3)
    normals = np.array([[s["nx"], s["ny"], s["nz"]] for s in shots], dtype=np.float64).reshape(-1, 3)
    times = np.array([s["t"] for s in shots], dtype=np.float64)
    return TreatmentPlan(
        centers=centers,
        normals=normals,
        emit_times=times,
        standoff=float(doc["standoff_mm"]),
        source=str(doc["source"]),
        laser=laser,
        warnings=tuple(doc.get("warnings", ())),
    )


def save_plan(plan: TreatmentPlan, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(plan_to_json(plan), fh, indent=1)
        fh.write("\n")


def load_plan(path: str) -> TreatmentPlan:
    with open(path, "r", encoding="utf-8") as fh:
        return plan_from_json(json.load(fh))
