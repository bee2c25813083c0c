"""Stochastic execution models for the two trial arms.

Both arms aim at the same intended lattice; they differ in what happens
between intent and pulse:

  human  aim jitter + random-walk drift of the scanline + site skipping,
         pacing drawn from a lognormal inter-shot interval
  robot  aim jitter only (a rigid arm does not drift or forget sites),
         plus a safety interlock that withholds any pulse whose footprint
         would touch a dilated exclusion zone

Per-call randomness comes from one counter-based generator (Philox keyed
by a hashed (seed, stream) pair), so every (subject, side, site) draw
sequence is independent and individually replayable.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import RegionError
from .planner import LaserSpec, TreatmentPlan, boustrophedon_order, plan_lattice
from .surface import Region

DEFAULT_STANDOFF_MM = 20.0

# Calibration search space bounds, mm / probability.
_AIM_RANGE = (0.0, 5.0)
_DRIFT_RANGE = (0.0, 3.0)
_SKIP_RANGE = (0.0, 0.6)


@dataclass(frozen=True)
class OperatorModel:
    """Noise and pacing parameters for one arm of the trial."""

    aim_sigma: float = 0.0  # mm, isotropic Gaussian aim jitter per shot
    drift_sigma: float = 0.0  # mm/shot, random-walk drift of the scanline
    rate_mean: float = 2.0  # shots/s
    rate_cv: float = 0.0  # coefficient of variation of inter-shot intervals
    skip_prob: float = 0.0  # probability of abandoning a lattice site
    intent_pattern: str = "hex"

    def __post_init__(self):
        if self.aim_sigma < 0 or self.drift_sigma < 0 or self.rate_cv < 0:
            raise ValueError("sigmas and rate_cv must be >= 0")
        if not 0.0 <= self.skip_prob < 1.0:
            raise ValueError(f"skip_prob must be in [0, 1), got {self.skip_prob}")
        if self.rate_mean <= 0:
            raise ValueError(f"rate_mean must be > 0, got {self.rate_mean}")
        if self.intent_pattern not in ("hex", "square"):
            raise ValueError(f"intent_pattern must be hex or square")

    def to_json(self) -> dict:
        return {
            "aim_sigma_mm": self.aim_sigma,
            "drift_sigma_mm": self.drift_sigma,
            "rate_mean_shots_s": self.rate_mean,
            "rate_cv": self.rate_cv,
            "skip_prob": self.skip_prob,
            "intent_pattern": self.intent_pattern,
        }

    @staticmethod
    def from_json(doc: dict) -> "OperatorModel":
        return OperatorModel(
            aim_sigma=float(doc["aim_sigma_mm"]),
            drift_sigma=float(doc["drift_sigma_mm"]),
            rate_mean=float(doc["rate_mean_shots_s"]),
            rate_cv=float(doc["rate_cv"]),
            skip_prob=float(doc["skip_prob"]),
            intent_pattern=str(doc.get("intent_pattern", "hex")),
        )


@dataclass(frozen=True)
class RngSeed:
    """(seed, stream) pair that fully determines a draw sequence.

    Streams are hierarchical path strings ("subject-3/left/cheek"); the
    pair is hashed into a Philox key, so sibling streams are independent
    no matter how their names relate.
    """

    seed: int
    stream: str = ""

    def derive(self, name: str) -> "RngSeed":
        return RngSeed(self.seed, f"{self.stream}/{name}" if self.stream else name)

    def generator(self) -> np.random.Generator:
        digest = hashlib.sha256(f"{self.seed}|{self.stream}".encode()).digest()
        words = tuple(
            int.from_bytes(digest[i : i + 8], "little") for i in range(0, 32, 8)
        )
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))


def simulate_pass(
    region: Region,
    laser: LaserSpec,
    model: OperatorModel,
    seed: RngSeed,
    standoff: float = DEFAULT_STANDOFF_MM,
    source: str = "human",
) -> TreatmentPlan:
    """One treatment pass over the region's intended lattice.

    Draw order is fixed (skips, drift steps, aim jitters, then intervals
    for surviving shots), so identical (model, seed) pairs reproduce the
    plan bit-for-bit. Shots that stray outside the selection stay in the
    plan - they simply cover nothing operable. With source="robot" the
    exclusion interlock drops unsafe shots instead (the hard landmark
    guarantee); drops are recorded in plan.warnings.
    """
    if not region.plannable:
        raise RegionError("region has zero operable area; nothing to simulate")
    intended = plan_lattice(region, laser, model.intent_pattern, "inside")
    if intended.shape[0] == 0:
        return TreatmentPlan(
            centers=np.zeros((0, 3)),
            normals=np.zeros((0, 3)),
            emit_times=np.zeros(0),
            standoff=float(standoff),
            source=source,
            laser=laser,
            warnings=("intended lattice is empty",),
        )
    intended = intended[boustrophedon_order(intended)]
    n = intended.shape[0]
    rng = seed.generator()

    skips = rng.random(n) < model.skip_prob
    drift = np.cumsum(rng.normal(0.0, model.drift_sigma, size=(n, 2)), axis=0)
    aim = rng.normal(0.0, model.aim_sigma, size=(n, 2))
    uv = intended + drift + aim
    uv = uv[~skips]

    warnings: list[str] = []
    xyz, normals = region.surface.lift(uv)
    if source == "robot" and region.exclusions:
        # interlock measures what validate_plan will measure: the clearance
        # of the shot as it lands on the surface, not just as aimed
        uv_landed = region.surface.project(xyz)
        clearance = region.clearance_to_exclusions(uv_landed)
        safe = clearance >= laser.spot_radius + region.margin - 1e-9
        dropped = int(np.count_nonzero(~safe))
        if dropped:
            warnings.append(
                f"safety interlock withheld {dropped} shot(s) near exclusions"
            )
        xyz, normals = xyz[safe], normals[safe]

    n_exec = xyz.shape[0]
    mean_interval = 1.0 / model.rate_mean
    if model.rate_cv > 0.0:
        sigma2 = np.log1p(model.rate_cv**2)
        mu = np.log(mean_interval) - sigma2 / 2.0
        intervals = rng.lognormal(mu, np.sqrt(sigma2), size=n_exec)
    else:
        intervals = np.full(n_exec, mean_interval)
    times = np.cumsum(intervals)

    return TreatmentPlan(
        centers=xyz,
        normals=normals,
        emit_times=times,
        standoff=float(standoff),
        source=source,
        laser=laser,
        warnings=tuple(warnings),
    )


# ---------------------------------------------------------------------------
# Calibration


@dataclass(frozen=True)
class CalibrationResult:
    """Search outcome: best model plus achieved-vs-target bookkeeping.

    converged is False when the best mean landed farther than 5 percentage
    points from the target; the best candidate is still returned.
    """

    model: OperatorModel
    achieved_mean: float
    achieved_sd: float
    target_mean: float
    target_sd: float
    converged: bool
    trace: tuple = field(default_factory=tuple)  # (params, mean, sd, objective)

    def to_json(self) -> dict:
        return {
            "model": self.model.to_json(),
            "achieved_mean_pct": self.achieved_mean,
            "achieved_sd_pct": self.achieved_sd,
            "target_mean_pct": self.target_mean,
            "target_sd_pct": self.target_sd,
            "converged": self.converged,
            "trace": [
                {
                    "aim_sigma_mm": a,
                    "drift_sigma_mm": d,
                    "skip_prob": s,
                    "mean_pct": m,
                    "sd_pct": sd,
                    "objective": obj,
                }
                for (a, d, s, m, sd, obj) in self.trace
            ],
        }


def _pooled_coverage(regions, laser, model, seed, standoff, pixel_size) -> float:
    """Union coverage percent pooled over a subject's patches (U-weighted)."""
    from .coverage import coverage_report  # local import, avoids a cycle

    phi = 0.0
    u = 0.0
    for i, region in enumerate(regions):
        plan = simulate_pass(region, laser, model, seed.derive(f"patch-{i}"), standoff)
        rep = coverage_report(region, plan, pixel_size)
        phi += rep.phi_union
        u += rep.U
    return 100.0 * phi / u if u else 0.0


def evaluate_model(
    regions,
    laser: LaserSpec,
    model: OperatorModel,
    seed: RngSeed,
    n_subjects: int = 17,
    standoff: float = DEFAULT_STANDOFF_MM,
    pixel_size: float = 0.2,
) -> tuple[float, float]:
    """(mean, sd) of pooled coverage over n_subjects simulated subjects."""
    vals = np.array(
        [
            _pooled_coverage(
                regions, laser, model, seed.derive(f"subject-{i}"), standoff, pixel_size
            )
            for i in range(n_subjects)
        ]
    )
    return float(vals.mean()), float(vals.std(ddof=1))


def calibrate_operator(
    target_mean: float,
    target_sd: float,
    regions,
    laser: LaserSpec,
    rate_mean: float,
    seed: RngSeed,
    search_budget: int = 60,
    robot_noise_space: bool = False,
    search_axes: tuple | None = None,
    rate_cv: float = 0.0,
    intent_pattern: str = "hex",
    n_subjects: int = 17,
    pixel_size: float = 0.2,
    standoff: float = DEFAULT_STANDOFF_MM,
) -> CalibrationResult:
    """Fit noise parameters so simulated coverage moments hit the targets.

    Coordinate search over (aim_sigma, drift_sigma, skip_prob) - aim only
    when robot_noise_space - minimizing |mean - target_mean| +
    |sd - target_sd|. Rate parameters are duration-derived and held
    fixed; search_axes can pin a subset (unswept axes stay 0). Candidates
    share subject seed streams (common random numbers), which keeps the
    objective smooth enough for bracketed sweeps.
    """
    if not 0.0 < target_mean < 100.0:
        raise ValueError(f"target_mean must be in (0, 100), got {target_mean}")
    if target_sd <= 0.0:
        raise ValueError(f"target_sd must be > 0, got {target_sd}")

    if search_axes is not None:
        axes = list(search_axes)
    else:
        axes = ["aim"] if robot_noise_space else ["aim", "drift", "skip"]
    bounds = {"aim": _AIM_RANGE, "drift": _DRIFT_RANGE, "skip": _SKIP_RANGE}
    if any(a not in bounds for a in axes):
        raise ValueError(f"search axes must be a subset of {tuple(bounds)}, got {axes}")
    current = {"aim": 0.0, "drift": 0.0, "skip": 0.0}
    spans = {k: (hi - lo) for k, (lo, hi) in bounds.items()}

    trace: list[tuple] = []
    evaluated: dict[tuple, tuple] = {}

    def build(params: dict) -> OperatorModel:
        return OperatorModel(
            aim_sigma=params["aim"],
            drift_sigma=params["drift"],
            rate_mean=rate_mean,
            rate_cv=rate_cv,
            skip_prob=params["skip"],
            intent_pattern=intent_pattern,
        )

    def objective(params: dict) -> tuple:
        key = (round(params["aim"], 9), round(params["drift"], 9), round(params["skip"], 9))
        if key not in evaluated:
            mean, sd = evaluate_model(
                regions, laser, build(params), seed, n_subjects, standoff, pixel_size
            )
            obj = abs(mean - target_mean) + abs(sd - target_sd)
            evaluated[key] = (mean, sd, obj)
            trace.append((key[0], key[1], key[2], mean, sd, obj))
        return evaluated[key]

    rounds = 3
    per_sweep = max(3, search_budget // (rounds * len(axes)))
    best = objective(current)
    for rnd in range(rounds):
        shrink = 0.5**rnd
        for axis in axes:
            lo, hi = bounds[axis]
            half = spans[axis] * shrink / 2.0
            lo_r = max(lo, current[axis] - half)
            hi_r = min(hi, current[axis] + half)
            candidates = np.linspace(lo_r, hi_r, per_sweep)
            for val in candidates:
                trial_params = dict(current, **{axis: float(val)})
                mean, sd, obj = objective(trial_params)
                if obj < best[2]:
                    best = (mean, sd, obj)
                    current = trial_params

    model = build(current)
    mean, sd, _ = objective(current)
    return CalibrationResult(
        model=model,
        achieved_mean=mean,
        achieved_sd=sd,
        target_mean=target_mean,
        target_sd=target_sd,
        converged=abs(mean - target_mean) <= 5.0,
        trace=tuple(trace),
    )
