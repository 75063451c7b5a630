"""
Weight windows of the last layer
================================

Each of the 50 units feeding the output layer has 150 outgoing weights.
Re-rolled into 30 x 5 they show which spectro-temporal shape the unit
paints. They are written as PGM images next to this script's output dir.
"""

# %%
import sys
from pathlib import Path

import numpy as np

from patchsep.autoenc import TrainConfig, export_weight_windows, init_model, train
from patchsep.export import export_pgm, write_weight_windows_csv

out_dir = Path(sys.argv[1] if len(sys.argv) > 1 else "weight_windows")
out_dir.mkdir(exist_ok=True)

# %%
# A small synthetic training set: horizontal lines at random heights.
rng = np.random.default_rng(0)
data = np.full((2000, 30, 5), 0.1)
rows = rng.integers(0, 30, 2000)
data[np.arange(2000), rows, :] = 0.9
model, _ = train(init_model((150, 50, 18, 6, 18, 50, 150), 0), data.reshape(2000, 150),
                 TrainConfig(epochs=30, seed=1))

# %%
windows = export_weight_windows(model, 30, 5)
for u, w in enumerate(windows):
    export_pgm(w, out_dir / f"weight_window_{u:02d}.pgm")
write_weight_windows_csv(windows, out_dir / "weight_windows.csv")
print(len(windows), "windows of shape", windows[0].shape, "written to", out_dir)
