"""Write a synthetic scene as Colmap text and NVM, read both back, compare.

    python demos/convert_and_validate.py [workdir]
"""

import sys
import tempfile
from pathlib import Path

import numpy as np

from photoscene import camera_center, load_reconstruction, reprojection_report, write_colmap_text, write_nvm
from photoscene.synthetic import NVM_MODELS, random_scene

work = Path(sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp())
scene = random_scene(3, n_cameras=8, n_points=300, models=NVM_MODELS)

write_colmap_text(scene, work / "colmap")
notes = write_nvm(scene, work / "scene.nvm")
print("nvm notes:", notes or "none")

colmap = load_reconstruction(work / "colmap")
nvm = load_reconstruction(work / "scene.nvm")

# NVM stores centres, Colmap stores translations; both must land on the same camera
for a, b in zip(colmap.views(), nvm.views()):
    gap = np.abs(camera_center(a.pose) - camera_center(b.pose)).max()
    print(f"{a.image_name}  centre {np.round(camera_center(a.pose), 3)}  gap {gap:.1e}")

for name, rec in (("colmap", colmap), ("nvm", nvm)):
    rep = reprojection_report(rec)
    print(f"{name}: {rep.evaluated} observations, rmse {rep.rmse:.2e} px")
