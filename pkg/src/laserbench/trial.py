"""Split-face trial protocol: N subjects, robot right side vs human left.

Every subject gets the same patch layout; the right side executes each
patch with the robot model (safety interlock on), the left side with the
human model. Per-patch coverage reports roll up into subject-level
metrics, arm aggregates, and three paired t-tests (coverage_pct, shots,
duration). The whole run is a pure function of the TrialConfig, master
seed included, so reruns are bit-identical.

Dispersions are reported as both SD and SEM; the trial's headline
mean +/- spread table uses SD.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .config import TrialConfig
from .coverage import CoverageReport, coverage_report
from .errors import RegionError, TrialError, WorkbenchError
from .operator_sim import simulate_pass
from .stats import student_t_two_tailed_p

RESULT_FORMAT = "trial-result/1"

SIDES = ("right", "left")  # right = robot arm, left = freehand
METRICS = ("coverage_pct", "shots", "duration")

# fixed CSV contract; downstream plotting depends on this exact order
CSV_COLUMNS = (
    "subject",
    "side",
    "site",
    "coverage_pct",
    "phi_union_mm2",
    "exactly_once_mm2",
    "multi_mm2",
    "uncovered_mm2",
    "U_mm2",
    "shots",
    "duration_s",
    "pixel_size_mm",
    "metric",
)


@dataclass(frozen=True)
class TTestResult:
    """Paired t-test outcome.

    degenerate marks a zero-variance difference vector: all-tied pairs
    give the limiting t=0, p=1; a constant nonzero difference gives
    t=+/-inf, p=0.
    """

    t: float
    df: int
    p: float
    mean_diff: float
    sd_diff: float
    degenerate: bool = False

    def to_json(self) -> dict:
        return {
            "t": self.t,
            "df": self.df,
            "p": self.p,
            "mean_diff": self.mean_diff,
            "sd_diff": self.sd_diff,
            "degenerate": self.degenerate,
        }

    @staticmethod
    def from_json(doc: dict) -> "TTestResult":
        return TTestResult(
            t=float(doc["t"]),
            df=int(doc["df"]),
            p=float(doc["p"]),
            mean_diff=float(doc["mean_diff"]),
            sd_diff=float(doc["sd_diff"]),
            degenerate=bool(doc["degenerate"]),
        )


def paired_t_test(a, b) -> TTestResult:
    """Two-tailed paired t-test on equal-length samples (difference a-b)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"samples must be equal-length vectors, got {a.shape} vs {b.shape}")
    n = a.size
    if n < 2:
        raise ValueError(f"paired test needs at least 2 pairs, got {n}")
    d = a - b
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    df = n - 1
    if sd == 0.0:
        if mean == 0.0:
            return TTestResult(0.0, df, 1.0, 0.0, 0.0, degenerate=True)
        t = math.inf if mean > 0 else -math.inf
        return TTestResult(t, df, 0.0, mean, 0.0, degenerate=True)
    t = mean / (sd / math.sqrt(n))
    return TTestResult(t, df, student_t_two_tailed_p(t, df), mean, sd)


@dataclass(frozen=True)
class TrialRow:
    """One (subject, side, site) cell of the trial."""

    subject: int
    side: str
    site: str
    report: CoverageReport

    def to_json(self) -> dict:
        return {
            "subject": self.subject,
            "side": self.side,
            "site": self.site,
            "report": self.report.to_json(),
        }

    @staticmethod
    def from_json(doc: dict) -> "TrialRow":
        return TrialRow(
            subject=int(doc["subject"]),
            side=str(doc["side"]),
            site=str(doc["site"]),
            report=CoverageReport.from_json(doc["report"]),
        )


@dataclass(frozen=True)
class Aggregate:
    """Mean and dispersion of one metric over one arm's valid subjects."""

    side: str
    metric: str
    mean: float
    sd: float
    sem: float
    n: int

    def to_json(self) -> dict:
        return {
            "side": self.side,
            "metric": self.metric,
            "mean": self.mean,
            "sd": self.sd,
            "sem": self.sem,
            "n": self.n,
        }

    @staticmethod
    def from_json(doc: dict) -> "Aggregate":
        return Aggregate(
            side=str(doc["side"]),
            metric=str(doc["metric"]),
            mean=float(doc["mean"]),
            sd=float(doc["sd"]),
            sem=float(doc["sem"]),
            n=int(doc["n"]),
        )


@dataclass(frozen=True)
class TrialResult:
    rows: tuple  # TrialRow per (subject, side, site), subject-major order
    aggregates: tuple  # Aggregate per (side, metric)
    tests: dict  # metric -> TTestResult
    pooling: str
    pixel_size: float
    valid_subjects: tuple
    invalid_subjects: tuple = field(default_factory=tuple)  # (subject, reason)

    def aggregate(self, side: str, metric: str) -> Aggregate:
        for agg in self.aggregates:
            if agg.side == side and agg.metric == metric:
                return agg
        raise KeyError(f"no aggregate for ({side}, {metric})")

    def subject_metrics(self, side: str, metric: str) -> np.ndarray:
        """Per-subject pooled metric values, ordered by subject index."""
        vals = []
        for s in self.valid_subjects:
            cells = [r.report for r in self.rows if r.subject == s and r.side == side]
            vals.append(_pool_metric(cells, metric, self.pooling))
        return np.array(vals)

    def to_json(self) -> dict:
        return {
            "format": RESULT_FORMAT,
            "pooling": self.pooling,
            "pixel_size_mm": self.pixel_size,
            "valid_subjects": list(self.valid_subjects),
            "invalid_subjects": [
                {"subject": s, "reason": reason} for s, reason in self.invalid_subjects
            ],
            "rows": [r.to_json() for r in self.rows],
            "aggregates": [a.to_json() for a in self.aggregates],
            "tests": {m: t.to_json() for m, t in self.tests.items()},
        }

    @staticmethod
    def from_json(doc: dict) -> "TrialResult":
        if doc.get("format") != RESULT_FORMAT:
            raise ValueError(f"not a {RESULT_FORMAT} document")
        return TrialResult(
            rows=tuple(TrialRow.from_json(r) for r in doc["rows"]),
            aggregates=tuple(Aggregate.from_json(a) for a in doc["aggregates"]),
            tests={m: TTestResult.from_json(t) for m, t in doc["tests"].items()},
            pooling=str(doc["pooling"]),
            pixel_size=float(doc["pixel_size_mm"]),
            valid_subjects=tuple(int(s) for s in doc["valid_subjects"]),
            invalid_subjects=tuple(
                (int(e["subject"]), str(e["reason"])) for e in doc["invalid_subjects"]
            ),
        )


def _pool_metric(reports, metric: str, pooling: str) -> float:
    """Combine one subject-side's patch reports into a single number.

    coverage_pct pools U-weighted (union area over total operable area)
    or as a plain mean of patch percentages; shots and duration add up.
    """
    if metric == "coverage_pct":
        if pooling == "u_weighted":
            total_u = sum(r.U for r in reports)
            return 100.0 * sum(r.phi_union for r in reports) / total_u if total_u else 0.0
        return float(np.mean([r.coverage_pct for r in reports]))
    if metric == "shots":
        return float(sum(r.shots for r in reports))
    if metric == "duration":
        return float(sum(r.duration for r in reports))
    raise ValueError(f"unknown metric {metric!r}")


def run_trial(config: TrialConfig, regions=None) -> TrialResult:
    """Execute the full split-face protocol for one TrialConfig.

    Per subject: right side simulated with the robot model (source
    "robot"), left side with the human model. Each (subject, side, site)
    cell draws from its own seed stream, so cells are independent and
    individually replayable. A subject whose simulation fails on any
    patch is excluded and reported; fewer than 2 surviving subjects is a
    trial-level failure.

    regions is a replication-loop performance hook: pass
    config.build_regions() once to share raster caches across many runs
    of the same layout. Results are identical either way.
    """
    if regions is None:
        regions = config.build_regions()
    elif len(regions) != len(config.patches):
        raise ValueError(
            f"regions ({len(regions)}) must match config.patches ({len(config.patches)})"
        )
    arms = (
        ("right", config.robot_model, "robot"),
        ("left", config.human_model, "human"),
    )

    rows: list[TrialRow] = []
    valid: list[int] = []
    invalid: list[tuple] = []
    for i in range(config.n_subjects):
        subject_seed = config.master_seed.derive(f"subject-{i}")
        subject_rows: list[TrialRow] = []
        try:
            for side, model, source in arms:
                side_seed = subject_seed.derive(side)
                for patch, region in zip(config.patches, regions):
                    plan = simulate_pass(
                        region,
                        config.laser,
                        model,
                        side_seed.derive(patch.site),
                        config.standoff,
                        source,
                    )
                    if plan.n_shots == 0:
                        # protocol cannot execute on this patch at all
                        raise RegionError(
                            f"patch {patch.site!r} produced no executable shots"
                        )
                    rep = coverage_report(region, plan, config.pixel_size)
                    subject_rows.append(TrialRow(i, side, patch.site, rep))
        except WorkbenchError as exc:
            invalid.append((i, str(exc)))
            continue
        rows.extend(subject_rows)
        valid.append(i)

    if len(valid) < 2:
        raise TrialError(
            f"only {len(valid)} of {config.n_subjects} subjects completed; "
            "a paired comparison needs at least 2"
        )

    result = TrialResult(
        rows=tuple(rows),
        aggregates=(),
        tests={},
        pooling=config.pooling,
        pixel_size=config.pixel_size,
        valid_subjects=tuple(valid),
        invalid_subjects=tuple(invalid),
    )
    per_side = {
        (side, metric): result.subject_metrics(side, metric)
        for side in SIDES
        for metric in METRICS
    }
    aggregates = tuple(
        Aggregate(
            side=side,
            metric=metric,
            mean=float(vals.mean()),
            sd=float(vals.std(ddof=1)),
            sem=float(vals.std(ddof=1) / math.sqrt(vals.size)),
            n=int(vals.size),
        )
        for side in SIDES
        for metric in METRICS
        for vals in [per_side[(side, metric)]]
    )
    tests = {
        metric: paired_t_test(per_side[("right", metric)], per_side[("left", metric)])
        for metric in METRICS
    }
    return TrialResult(
        rows=result.rows,
        aggregates=aggregates,
        tests=tests,
        pooling=result.pooling,
        pixel_size=result.pixel_size,
        valid_subjects=result.valid_subjects,
        invalid_subjects=result.invalid_subjects,
    )


def export_report(result: TrialResult, format: str, path) -> None:
    """Write a TrialResult to disk.

    csv: one row per (subject, side, site), columns exactly CSV_COLUMNS.
    json: the full nested result; TrialResult.from_json restores it
    losslessly. Neither format embeds timestamps, so identical results
    produce identical bytes.
    """
    if not result.rows:
        raise TrialError("nothing to export: trial result has no subject rows")
    if format == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for row in result.rows:
                r = row.report
                writer.writerow(
                    [
                        row.subject,
                        row.side,
                        row.site,
                        repr(r.coverage_pct),
                        repr(r.phi_union),
                        repr(r.exactly_once),
                        repr(r.multi),
                        repr(r.uncovered),
                        repr(r.U),
                        r.shots,
                        repr(r.duration),
                        repr(r.pixel_size),
                        r.metric,
                    ]
                )
    elif format == "json":
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(result.to_json(), fh, indent=2)
            fh.write("\n")
    else:
        raise ValueError(f"format must be csv or json, got {format!r}")
