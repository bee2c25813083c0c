"""Shot lattices and executable treatment plans.

Compares hex and square packings on the curved cheek patch, shows what
the boundary policy buys, then builds a full timed plan (boustrophedon
order, constant standoff) and validates it against the protocol rules.

Run: python3 demos/02_lattice_planning.py
"""

import math
import pathlib

from laserbench import geometry
from laserbench.planner import (
    KinematicModel,
    LaserSpec,
    load_plan,
    plan_lattice,
    plan_treatment,
    save_plan,
    validate_plan,
)
from laserbench.surface import define_region, make_cheek_phantom

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

laser = LaserSpec()  # 1064 nm, 6 mm spot, 600 mJ/cm^2
kin = KinematicModel(travel_speed=40.0, dwell=0.35)
region = define_region(
    make_cheek_phantom(76.0, 76.0, 60.0), geometry.rectangle(0, 0, 76, 76)
)

# --- packing comparison -----------------------------------------------
spot_area = math.pi * laser.spot_radius**2
bound = 100.0 * math.pi / (2.0 * math.sqrt(3.0))  # densest planar packing
print(f"{'pattern':<8} {'policy':<14} {'shots':>5}  naive density")
for pattern in ("hex", "square"):
    for policy in ("inside", "center-inside"):
        centers = plan_lattice(region, laser, pattern, policy)
        density = 100.0 * len(centers) * spot_area / region.operable_area
        print(f"{pattern:<8} {policy:<14} {len(centers):>5}  {density:5.1f}%")
print(f"(hex-packing ceiling is {bound:.2f}%; 'center-inside' trades a bit of")
print(" footprint spill at the border for more sites)")

# --- a full plan ------------------------------------------------------
plan = plan_treatment(region, laser, kin, standoff=20.0, pattern="hex")
report = validate_plan(plan, region)
print(f"\nhex plan: {plan.n_shots} shots, {plan.duration:.1f} s "
      f"(serpentine rows, {kin.travel_speed} mm/s travel, {kin.dwell} s dwell)")
print(f"validation: ok={report.ok} counts={report.counts()}")
cx, cy, cz = plan.shots[0].center
print(f"first shot pose: surface point ({cx:.1f}, {cy:.1f}, {cz:.1f}),"
      f" emitter held {plan.standoff} mm along the normal")

# --- wire format round trip -------------------------------------------
path = OUT / "cheek_hex_plan.json"
save_plan(plan, str(path))
again = load_plan(str(path))
print(f"\nsaved {path.name} ({path.stat().st_size} bytes); "
      f"reload matches: {again.n_shots == plan.n_shots and again.duration == plan.duration}")
