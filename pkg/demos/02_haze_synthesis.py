"""
Non-uniform haze synthesis
==========================

Generate hazy observations with a seeded generator and save the fields.
Run from the repository root; results land in ``demo_out/``.
"""

from pathlib import Path

import numpy as np

from scatterprox import AugmentSpec, SynthesisSpec, synthesize
from scatterprox.fileio import write_pfm, write_png
from scatterprox.synth import procedural_depth, procedural_scene

out = Path("demo_out")
out.mkdir(exist_ok=True)

clean = procedural_scene(192, 256, np.random.default_rng(3))
depth = procedural_depth(192, 256, "two-plane")

for seed in range(4):
    spec = SynthesisSpec(seed=seed, nonuniform_prob=1.0 if seed % 2 else 0.0,
                         augment=AugmentSpec(luminance_jitter=0.1, noise_std=0.01))
    res = synthesize(clean, depth, spec)
    p = res.params
    print(f"seed {seed}: beta_init={p['beta_init']:.3f} non-uniform={p['nonuniform']} "
          f"h_near={p['h_near']:.3f} d0={p['d0']:.3f} airlight={np.round(p['airlight'], 3)}")
    print(f"         transmission range [{res.transmission.min():.3f}, {res.transmission.max():.3f}]")
    write_png(out / f"hazy_{seed}.png", res.hazy)
    write_pfm(out / f"T_{seed}.pfm", res.transmission)
    write_pfm(out / f"beta_{seed}.pfm", res.density)

# the same seed reproduces the same output bit for bit
a = synthesize(clean, depth, SynthesisSpec(seed=1))
b = synthesize(clean, depth, SynthesisSpec(seed=1))
print("reproducible:", a.hazy.tobytes() == b.hazy.tobytes())
