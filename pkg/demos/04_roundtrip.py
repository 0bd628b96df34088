"""
Round trip: synthesize, dehaze, compare
=======================================

Equivalent to ``scatterprox roundtrip --scenes 8 --size 128``, done in-process.
"""

import numpy as np

from scatterprox import StageConfig, SynthesisSpec
from scatterprox.cli import roundtrip_one, summarize_rows
from scatterprox.synth import procedural_depth, procedural_scene

rows = []
for seed in range(8):
    clean = procedural_scene(128, 128, np.random.default_rng([seed, 1]))
    depth = procedural_depth(128, 128, "vertical")
    row, _, _ = roundtrip_one(clean, depth, SynthesisSpec(seed=seed), StageConfig())
    rows.append(row)
    print(f"scene {seed}: hazy {row['psnr_hazy']:.2f} dB -> dehazed {row['psnr_dehazed']:.2f} dB, "
          f"|T err| {row['t_mae']:.3f}")

for key, value in summarize_rows(rows, seed=0).items():
    print(f"{key} = {value}")
