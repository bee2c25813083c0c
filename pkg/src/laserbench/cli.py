"""Command-line entry point.

Subcommands: plan, simulate, score, trial, calibrate, serve. Every run is
driven by one trial-config/1 document (defaults when no --config is
given) plus dotted-key --set overrides, so any published number is
replayable from its config file and seed alone.

Primary output files contain no timestamps or environment data; those go
to a <out>.meta.json sidecar. Reruns with identical inputs therefore
produce byte-identical primary outputs.

Failures print a single machine-readable JSON line to stderr:
  {"error": "config"|"runtime", "message": "..."}
and exit 2 (config problems) or 1 (runtime failures).
"""

from __future__ import annotations

import argparse
import datetime
import json
import secrets
import sys
from dataclasses import replace

from . import __version__
from .config import (
    TrialConfig,
    apply_overrides,
    default_config,
    parse_config,
)
from .coverage import coverage_report
from .errors import ConfigError, WorkbenchError
from .operator_sim import RngSeed, calibrate_operator, simulate_pass
from .planner import (
    BOUNDARY_POLICIES,
    load_plan,
    plan_treatment,
    save_plan,
    validate_plan,
)
from .trial import export_report, run_trial

REPORT_CSV_COLUMNS = (
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


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="laserbench",
        description="Plan, simulate, and score split-face laser treatments.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, needs_out=True):
        p.add_argument("--config", help="trial-config/1 JSON file (defaults built in)")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="dotted-key config override, e.g. human_model.aim_sigma_mm=3",
        )
        p.add_argument("--pixel-size", type=float, help="raster pixel size in mm")
        p.add_argument("--seed", type=int, help="random seed (recorded in metadata)")
        if needs_out:
            p.add_argument("--out", required=True, help="primary output path")

    p_plan = sub.add_parser("plan", help="deterministic lattice plan + validation")
    common(p_plan)
    p_plan.add_argument("--patch", help="site name from config.patches (default: first)")
    p_plan.add_argument("--pattern", choices=("hex", "square"), default="hex")
    p_plan.add_argument("--policy", choices=BOUNDARY_POLICIES, default="inside")

    p_sim = sub.add_parser("simulate", help="one stochastic operator pass")
    common(p_sim)
    p_sim.add_argument("--patch", help="site name from config.patches (default: first)")
    p_sim.add_argument(
        "--source",
        choices=("robot", "human"),
        default="human",
        help="which arm's model and execution rules to apply",
    )

    p_score = sub.add_parser("score", help="coverage report for a saved plan")
    common(p_score)
    p_score.add_argument("--patch", help="site name from config.patches (default: first)")
    p_score.add_argument("--plan", required=True, help="treatment-plan/1 JSON file")
    p_score.add_argument("--format", choices=("csv", "json"), default="json")

    p_trial = sub.add_parser("trial", help="full split-face trial")
    common(p_trial)
    p_trial.add_argument(
        "--format",
        choices=("csv", "json"),
        help="restrict output to one format (default: both)",
    )

    p_cal = sub.add_parser("calibrate", help="fit operator noise to coverage targets")
    common(p_cal)
    p_cal.add_argument("--arm", choices=("robot", "human"), required=True)
    p_cal.add_argument("--target-mean", type=float, required=True)
    p_cal.add_argument("--target-sd", type=float, required=True)
    p_cal.add_argument("--budget", type=int, default=60)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    common(p_serve, needs_out=False)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8430)

    return parser


def _load_config(args) -> TrialConfig:
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                doc = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {args.config}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {args.config}: {exc}")
    else:
        doc = default_config().to_json()
    if args.overrides:
        if not isinstance(doc, dict):
            raise ConfigError("config root must be an object to apply overrides")
        apply_overrides(doc, args.overrides)
    config = parse_config(doc)
    if args.pixel_size is not None:
        if args.pixel_size <= 0:
            raise ConfigError(f"--pixel-size must be > 0, got {args.pixel_size}")
        config = replace(config, pixel_size=args.pixel_size)
    return config


def _select_patch(config: TrialConfig, site):
    if site is None:
        return config.patches[0]
    for patch in config.patches:
        if patch.site == site:
            return patch
    raise ConfigError(
        f"no patch named {site!r} (have: {[p.site for p in config.patches]})"
    )


def _write_json(path, doc) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _write_meta(out_path, args, seed, extra=None) -> None:
    """Everything volatile (timestamps, versions, seeds) lives here, not
    in the primary outputs."""
    meta = {
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "tool_version": __version__,
        "subcommand": args.subcommand,
        "seed": seed,
        "overrides": list(args.overrides),
        "config_file": args.config,
    }
    if extra:
        meta.update(extra)
    _write_json(f"{out_path}.meta.json", meta)


def _resolve_seed(args) -> int:
    """Randomized subcommands need a replayable seed: take --seed or
    generate one (it lands in the metadata sidecar either way)."""
    if args.seed is not None:
        return args.seed
    return secrets.randbits(31)


def _cmd_plan(args) -> int:
    config = _load_config(args)
    patch = _select_patch(config, args.patch)
    region = patch.build_region()
    plan = plan_treatment(
        region, config.laser, config.kin, config.standoff, args.pattern, args.policy
    )
    report = validate_plan(plan, region)
    save_plan(plan, args.out)
    _write_json(f"{args.out}.validation.json", report.to_json())
    _write_meta(args.out, args, seed=None, extra={"patch": patch.site})
    print(
        f"planned {plan.n_shots} shots on {patch.site} "
        f"({len(report.violations)} violations) -> {args.out}"
    )
    return 0


def _cmd_simulate(args) -> int:
    config = _load_config(args)
    patch = _select_patch(config, args.patch)
    region = patch.build_region()
    model = config.robot_model if args.source == "robot" else config.human_model
    seed = _resolve_seed(args)
    plan = simulate_pass(
        region, config.laser, model, RngSeed(seed), config.standoff, args.source
    )
    save_plan(plan, args.out)
    _write_meta(args.out, args, seed=seed, extra={"patch": patch.site, "source": args.source})
    print(f"simulated {plan.n_shots} {args.source} shots on {patch.site} -> {args.out}")
    return 0


def _cmd_score(args) -> int:
    config = _load_config(args)
    patch = _select_patch(config, args.patch)
    region = patch.build_region()
    plan = load_plan(args.plan)
    report = coverage_report(region, plan, config.pixel_size)
    if args.format == "json":
        _write_json(args.out, report.to_json())
    else:
        doc = report.to_json()
        lines = [",".join(REPORT_CSV_COLUMNS)]
        lines.append(",".join(repr(doc[c]) if isinstance(doc[c], float) else str(doc[c]) for c in REPORT_CSV_COLUMNS))
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    _write_meta(args.out, args, seed=None, extra={"patch": patch.site, "plan": args.plan})
    print(f"coverage {report.coverage_pct:.2f}% of {patch.site} -> {args.out}")
    return 0


def _cmd_trial(args) -> int:
    config = _load_config(args)
    if args.seed is not None:
        config = replace(config, master_seed=RngSeed(args.seed))
    result = run_trial(config)
    written = []
    if args.format in (None, "csv"):
        export_report(result, "csv", f"{args.out}.csv")
        written.append(f"{args.out}.csv")
    if args.format in (None, "json"):
        export_report(result, "json", f"{args.out}.json")
        written.append(f"{args.out}.json")
    _write_meta(
        args.out,
        args,
        seed=config.master_seed.seed,
        extra={"n_valid_subjects": len(result.valid_subjects)},
    )
    cov = result.tests["coverage_pct"]
    print(
        f"trial: {len(result.valid_subjects)} subjects, coverage "
        f"right {result.aggregate('right', 'coverage_pct').mean:.1f}% vs "
        f"left {result.aggregate('left', 'coverage_pct').mean:.1f}% "
        f"(p={cov.p:.2e}) -> {', '.join(written)}"
    )
    return 0


def _cmd_calibrate(args) -> int:
    config = _load_config(args)
    seed = _resolve_seed(args)
    regions = config.build_regions()
    base = config.robot_model if args.arm == "robot" else config.human_model
    result = calibrate_operator(
        args.target_mean,
        args.target_sd,
        regions,
        config.laser,
        rate_mean=base.rate_mean,
        seed=RngSeed(seed, f"calibrate/{args.arm}"),
        search_budget=args.budget,
        robot_noise_space=(args.arm == "robot"),
        search_axes=None if args.arm == "robot" else ("aim", "drift"),
        rate_cv=base.rate_cv,
        n_subjects=config.n_subjects,
        pixel_size=config.pixel_size,
        standoff=config.standoff,
    )
    _write_json(args.out, result.to_json())
    _write_meta(args.out, args, seed=seed, extra={"arm": args.arm})
    print(
        f"calibrated {args.arm}: mean {result.achieved_mean:.2f}% "
        f"(target {args.target_mean}), converged={result.converged} -> {args.out}"
    )
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    config = _load_config(args)
    uvicorn.run(create_app(config), host=args.host, port=args.port, log_level="warning")
    return 0


_COMMANDS = {
    "plan": _cmd_plan,
    "simulate": _cmd_simulate,
    "score": _cmd_score,
    "trial": _cmd_trial,
    "calibrate": _cmd_calibrate,
    "serve": _cmd_serve,
}


def _emit_error(kind: str, exc: BaseException) -> None:
    print(json.dumps({"error": kind, "message": str(exc)}), file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.subcommand](args)
    except ConfigError as exc:
        _emit_error("config", exc)
        return 2
    except WorkbenchError as exc:
        _emit_error("runtime", exc)
        return 1
    except OSError as exc:
        _emit_error("runtime", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
