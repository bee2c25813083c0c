"""Surfaces and operable regions, end to end.

Builds the two standard skin phantoms, round-trips one through PLY,
then defines a treatment region with a landmark exclusion and exports
its raster mask as a PGM you can open in any image viewer.

Run: python3 demos/01_surfaces_and_regions.py
"""

import pathlib

import numpy as np

from laserbench import geometry
from laserbench.coverage import mask_to_pgm, rasterize
from laserbench.surface import (
    ExclusionZone,
    define_region,
    load_mesh,
    make_cheek_phantom,
    make_flat_patch,
    save_mesh,
)

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

# --- phantoms ---------------------------------------------------------
flat = make_flat_patch(40.0, 50.0)
cheek = make_cheek_phantom(76.0, 76.0, curvature_radius=60.0)
print(f"flat patch:  {len(flat.vertices)} vertices, area {flat.area():.1f} mm^2")
print(f"cheek patch: {len(cheek.vertices)} vertices, area {cheek.area():.1f} mm^2")
print("the cheek bends along u, so its 3D area equals the flat uv area:",
      f"{cheek.area():.1f} vs 76*76 = {76 * 76}")

# --- mesh round trip --------------------------------------------------
ply = OUT / "cheek.ply"
save_mesh(cheek, str(ply))
back = load_mesh(str(ply))
print(f"\nsaved {ply.name} ({ply.stat().st_size} bytes), reloaded "
      f"{len(back.vertices)} vertices, area drift "
      f"{abs(back.area() - cheek.area()):.2e} mm^2")

# --- region with an exclusion -----------------------------------------
# Select a 40x50 window on the flat patch and punch out a small disc
# (say, a mole to avoid). The margin dilates the exclusion so even the
# spot edge keeps its distance.
ring = np.linspace(0.0, 2 * np.pi, 24, endpoint=False)
mole = np.column_stack([20 + 4 * np.cos(ring), 25 + 4 * np.sin(ring)])
region = define_region(
    flat,
    geometry.rectangle(0, 0, 40, 50),
    exclusions=(ExclusionZone(mole, "custom"),),
    margin=5.0,
)
print(f"\nselection area {region.selection_area:.1f} mm^2, "
      f"operable {region.operable_area:.1f} mm^2 "
      f"(exclusion zone dilated by {region.margin} mm)")
print(f"plannable: {region.plannable}")

# --- raster mask export -----------------------------------------------
mask = rasterize(region, pixel_size=0.2)
pgm = OUT / "region_mask.pgm"
mask_to_pgm(mask, str(pgm))
h, w = mask.shape
print(f"\nwrote {pgm.name}: {w}x{h} px at {mask.pixel_size} mm "
      f"(white = operable, gray = excluded, black = outside)")
