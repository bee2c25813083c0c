"""Scoring a pass: union coverage, dose accumulation, heatmaps.

Runs one robot and one human pass over the forehead patch, scores both
with the raster pipeline, then exports a dose heatmap two ways: the
compact binary layer the HTTP service streams, and PGM images for a
quick look.

Run: python3 demos/04_coverage_scoring.py
"""

import pathlib

import numpy as np

from laserbench.config import default_config
from laserbench.coverage import (
    coverage_report,
    dose_map,
    read_heatmap_layer,
    write_heatmap_layer,
    write_pgm,
)
from laserbench.operator_sim import RngSeed, simulate_pass

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

cfg = default_config()
region = cfg.patches[0].build_region()
seed = RngSeed(11, "scoring")

for source, model in (("robot", cfg.robot_model), ("human", cfg.human_model)):
    plan = simulate_pass(region, cfg.laser, model, seed.derive(source), source=source)
    rep = coverage_report(region, plan, pixel_size=0.1)
    print(f"{source}: {rep.shots} shots, {rep.duration:.1f} s")
    print(f"  operable U        {rep.U:9.1f} mm^2")
    print(f"  union coverage    {rep.phi_union:9.1f} mm^2  ({rep.coverage_pct:.1f}%)")
    print(f"  exactly once      {rep.exactly_once:9.1f} mm^2")
    print(f"  overlapped        {rep.multi:9.1f} mm^2")
    print(f"  untreated         {rep.uncovered:9.1f} mm^2")

# --- dose map and exports ---------------------------------------------
plan = simulate_pass(
    region, cfg.laser, cfg.human_model, seed.derive("human"), source="human"
)
dm = dose_map(region, plan, pixel_size=0.1)
print(f"\nhuman-pass dose over operable skin: min {dm.dose_min:.0f}, "
      f"mean {dm.dose_mean:.0f}, max {dm.dose_max:.0f} mJ/cm^2")
print(f"area hit twice or more: {dm.overdose_area:.1f} mm^2")

blob = write_heatmap_layer(dm.counts, dm.pixel_size)
counts, px = read_heatmap_layer(blob)
assert np.array_equal(counts, dm.counts)  # counts exact; pixel size is f32
assert abs(px - dm.pixel_size) < 1e-7
h, w = dm.counts.shape
print(f"\nbinary heatmap layer: {len(blob)} bytes "
      f"(12-byte header + {w}x{h} u32 grid), round-trips exactly")

pgm = OUT / "human_dose.pgm"
write_pgm(str(pgm), dm.dose)
print(f"wrote {pgm.name} (brightness = cumulative fluence)")
