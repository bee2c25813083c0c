"""Declarative trial configuration.

One JSON document (format "trial-config/1") pins everything a trial run
needs: subject count, patch layout, laser, both operator models, pacing,
raster resolution, and the master seed. Identical documents reproduce
identical trials bit for bit, so a config file plus this package version
is a complete replication recipe.

The frozen defaults describe the standard scenario: a 40x50 mm flat
forehead patch and a 76x76 mm curved cheek patch (radius 60 mm), one hex
lattice pass per patch, a robot arm on the right side and a freehand
operator on the left. Noise parameters come from scripts/
calibrate_defaults.py; shot rates are set so a full default-layout
session averages the reference durations below.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from . import geometry
from .errors import ConfigError
from .operator_sim import OperatorModel, RngSeed
from .planner import KinematicModel, LaserSpec
from .surface import Region, define_region, make_cheek_phantom, make_flat_patch

CONFIG_FORMAT = "trial-config/1"

# Surfaces get an apron beyond the scored selection so badly aimed shots
# still land on real geometry (and score zero) instead of clamping to the
# patch edge (which would fake coverage there).
DEFAULT_PAD_MM = 12.0

# Standard layout facts the default pacing is derived from: the two
# default patches hold 211 hex lattice sites, and a full session should
# average 107.4 s for the robot arm and 78.6 s freehand.
STANDARD_SITE_COUNT = 211
REFERENCE_ROBOT_SESSION_S = 107.4
REFERENCE_HUMAN_SESSION_S = 78.6

DEFAULT_ROBOT_MODEL = OperatorModel(
    aim_sigma=1.77,
    drift_sigma=0.0,
    rate_mean=STANDARD_SITE_COUNT / REFERENCE_ROBOT_SESSION_S,
    rate_cv=0.05,
    skip_prob=0.0,
)

DEFAULT_HUMAN_MODEL = OperatorModel(
    aim_sigma=2.43,
    drift_sigma=1.33,
    rate_mean=STANDARD_SITE_COUNT / REFERENCE_HUMAN_SESSION_S,
    rate_cv=0.40,
    skip_prob=0.0,
)


@dataclass(frozen=True)
class PatchSpec:
    """One treatment patch: a named rectangle, flat or cylinder-curved."""

    site: str
    width: float  # mm, u extent of the scored selection
    height: float  # mm, v extent
    curvature_radius: float | None = None  # mm; None = flat

    def __post_init__(self):
        if not self.site:
            raise ValueError("patch site name must be non-empty")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(
                f"patch dimensions must be > 0, got {self.width}x{self.height}"
            )
        if self.curvature_radius is not None:
            padded = max(self.width, self.height) + 2 * DEFAULT_PAD_MM
            if self.curvature_radius < padded / 2:
                raise ValueError(
                    f"curvature radius {self.curvature_radius} too tight for a "
                    f"{self.width}x{self.height} patch (needs >= {padded / 2})"
                )

    def build_region(self, exclusions=(), margin: float = 5.0) -> Region:
        pad = DEFAULT_PAD_MM
        w, h = self.width + 2 * pad, self.height + 2 * pad
        if self.curvature_radius is None:
            surface = make_flat_patch(w, h)
        else:
            surface = make_cheek_phantom(w, h, self.curvature_radius)
        selection = geometry.rectangle(pad, pad, self.width, self.height)
        return define_region(surface, selection, exclusions, margin)

    def to_json(self) -> dict:
        return {
            "site": self.site,
            "width_mm": self.width,
            "height_mm": self.height,
            "curvature_radius_mm": self.curvature_radius,
        }

    @staticmethod
    def from_json(doc: dict) -> "PatchSpec":
        radius = doc.get("curvature_radius_mm")
        return PatchSpec(
            site=str(doc["site"]),
            width=float(doc["width_mm"]),
            height=float(doc["height_mm"]),
            curvature_radius=None if radius is None else float(radius),
        )


DEFAULT_PATCHES = (
    PatchSpec("forehead", 40.0, 50.0, None),
    PatchSpec("cheek", 76.0, 76.0, 60.0),
)


@dataclass(frozen=True)
class TrialConfig:
    """Everything one split-face trial run depends on."""

    n_subjects: int = 17
    patches: tuple = DEFAULT_PATCHES
    laser: LaserSpec = field(default_factory=LaserSpec)
    robot_model: OperatorModel = DEFAULT_ROBOT_MODEL
    human_model: OperatorModel = DEFAULT_HUMAN_MODEL
    standoff: float = 20.0  # mm
    kin: KinematicModel = field(
        default_factory=lambda: KinematicModel(travel_speed=40.0, dwell=0.35)
    )
    pixel_size: float = 0.1  # mm, trial-scale raster resolution
    master_seed: RngSeed = RngSeed(1)
    pooling: str = "u_weighted"  # how patch metrics combine per subject

    def __post_init__(self):
        if self.n_subjects < 2:
            raise ValueError(
                f"n_subjects must be >= 2 for a paired test, got {self.n_subjects}"
            )
        if not self.patches:
            raise ValueError("patches must be non-empty")
        sites = [p.site for p in self.patches]
        if len(set(sites)) != len(sites):
            raise ValueError(f"patch site names must be unique, got {sites}")
        if self.standoff < 0:
            raise ValueError(f"standoff must be >= 0, got {self.standoff}")
        if self.pixel_size <= 0:
            raise ValueError(f"pixel_size must be > 0, got {self.pixel_size}")
        if self.pooling not in ("u_weighted", "unweighted"):
            raise ValueError(
                f"pooling must be u_weighted or unweighted, got {self.pooling}"
            )

    def build_regions(self) -> list:
        return [p.build_region() for p in self.patches]

    def to_json(self) -> dict:
        return {
            "format": CONFIG_FORMAT,
            "n_subjects": self.n_subjects,
            "patches": [p.to_json() for p in self.patches],
            "laser": {
                "wavelength_nm": self.laser.wavelength,
                "spot_diameter_mm": self.laser.spot_diameter,
                "fluence_mj_cm2": self.laser.fluence,
            },
            "robot_model": self.robot_model.to_json(),
            "human_model": self.human_model.to_json(),
            "standoff_mm": self.standoff,
            "kinematics": {
                "travel_speed_mm_s": self.kin.travel_speed,
                "dwell_s": self.kin.dwell,
                "reach_mm": self.kin.reach,
            },
            "pixel_size_mm": self.pixel_size,
            "master_seed": {
                "seed": self.master_seed.seed,
                "stream": self.master_seed.stream,
            },
            "pooling": self.pooling,
        }


_TOP_LEVEL_KEYS = frozenset(
    {
        "format",
        "n_subjects",
        "patches",
        "laser",
        "robot_model",
        "human_model",
        "standoff_mm",
        "kinematics",
        "pixel_size_mm",
        "master_seed",
        "pooling",
    }
)


def default_config() -> TrialConfig:
    return TrialConfig()


def parse_config(doc: dict) -> TrialConfig:
    """Build a validated TrialConfig from a trial-config/1 document.

    Raises ConfigError naming the offending field; unknown keys are
    rejected rather than ignored so typos cannot silently fall back to
    defaults.
    """
    if not isinstance(doc, dict):
        raise ConfigError(f"config root must be an object, got {type(doc).__name__}")
    fmt = doc.get("format", CONFIG_FORMAT)
    if fmt != CONFIG_FORMAT:
        raise ConfigError(f"unsupported config format {fmt!r} (want {CONFIG_FORMAT!r})")
    unknown = set(doc) - _TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    base = default_config()
    kwargs = {}
    try:
        if "n_subjects" in doc:
            kwargs["n_subjects"] = int(doc["n_subjects"])
        if "patches" in doc:
            kwargs["patches"] = tuple(PatchSpec.from_json(p) for p in doc["patches"])
        if "laser" in doc:
            lz = doc["laser"]
            kwargs["laser"] = LaserSpec(
                wavelength=float(lz.get("wavelength_nm", 1064.0)),
                spot_diameter=float(lz.get("spot_diameter_mm", 6.0)),
                fluence=float(lz.get("fluence_mj_cm2", 600.0)),
            )
        if "robot_model" in doc:
            kwargs["robot_model"] = OperatorModel.from_json(doc["robot_model"])
        if "human_model" in doc:
            kwargs["human_model"] = OperatorModel.from_json(doc["human_model"])
        if "standoff_mm" in doc:
            kwargs["standoff"] = float(doc["standoff_mm"])
        if "kinematics" in doc:
            kz = doc["kinematics"]
            kwargs["kin"] = KinematicModel(
                travel_speed=float(kz.get("travel_speed_mm_s", 40.0)),
                dwell=float(kz.get("dwell_s", 0.35)),
                reach=float(kz.get("reach_mm", 850.0)),
            )
        if "pixel_size_mm" in doc:
            kwargs["pixel_size"] = float(doc["pixel_size_mm"])
        if "master_seed" in doc:
            ms = doc["master_seed"]
            if isinstance(ms, dict):
                kwargs["master_seed"] = RngSeed(
                    int(ms["seed"]), str(ms.get("stream", ""))
                )
            else:
                kwargs["master_seed"] = RngSeed(int(ms))
        if "pooling" in doc:
            kwargs["pooling"] = str(doc["pooling"])
        return replace(base, **kwargs)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from exc


def load_config(path) -> TrialConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {path}: {exc}") from exc
    return parse_config(doc)


def save_config(config: TrialConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_json(), fh, indent=2)
        fh.write("\n")


def _parse_override_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text  # bare strings like site=cheek need no quoting


def apply_overrides(doc: dict, assignments) -> dict:
    """Apply dotted-key overrides ("human_model.aim_sigma_mm=3.0") to a
    config document. List elements are addressed by integer index
    ("patches.0.width_mm=30"). Unknown paths raise ConfigError listing
    the keys that do exist at the failing level.
    """
    for assignment in assignments:
        if "=" not in assignment:
            raise ConfigError(f"override must look like key=value, got {assignment!r}")
        path, _, raw = assignment.partition("=")
        keys = path.strip().split(".")
        if not all(keys):
            raise ConfigError(f"override has an empty path segment: {assignment!r}")
        node = doc
        for i, key in enumerate(keys[:-1]):
            node = _descend(node, key, path)
            if not isinstance(node, (dict, list)):
                raise ConfigError(
                    f"override path {path!r}: {'.'.join(keys[: i + 1])!r} "
                    "is a scalar, cannot descend further"
                )
        leaf = keys[-1]
        value = _parse_override_value(raw.strip())
        if isinstance(node, list):
            idx = _list_index(node, leaf, path)
            node[idx] = value
        else:
            if leaf not in node:
                raise ConfigError(
                    f"override path {path!r}: unknown key {leaf!r} "
                    f"(have: {sorted(node)})"
                )
            node[leaf] = value
    return doc


def _descend(node, key: str, path: str):
    if isinstance(node, list):
        return node[_list_index(node, key, path)]
    if isinstance(node, dict):
        if key not in node:
            raise ConfigError(
                f"override path {path!r}: unknown key {key!r} (have: {sorted(node)})"
            )
        return node[key]
    raise ConfigError(f"override path {path!r}: cannot descend into {type(node).__name__}")


def _list_index(node: list, key: str, path: str) -> int:
    try:
        idx = int(key)
    except ValueError:
        raise ConfigError(f"override path {path!r}: list index expected, got {key!r}")
    if not -len(node) <= idx < len(node):
        raise ConfigError(
            f"override path {path!r}: index {idx} out of range for list of {len(node)}"
        )
    return idx
