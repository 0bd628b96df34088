"""
Proximal stages on a synthetic hazy image
=========================================

Render haze with the scattering model, then run the closed-form stage
iteration and watch the data term fall stage by stage.
"""

import numpy as np

from scatterprox import StageConfig, render_scattering, run_psar
from scatterprox.synth import procedural_depth, procedural_scene

rng = np.random.default_rng(0)
J = procedural_scene(128, 128, rng)

# transmission from a vertical depth ramp, grey airlight
D = procedural_depth(128, 128, "vertical")
T = np.exp(-1.0 * (1.0 - D))
A = np.full_like(J, 0.85)
P = render_scattering(J, T, A)

state, trace = run_psar(P, StageConfig(num_stages=6, record_states=True))

print("stage  data term   mean T   PSNR(J, clean)")
for k, (value, s) in enumerate(zip(trace.data_terms, trace.states)):
    mse = np.mean((np.clip(s.J, 0, 1) - J) ** 2)
    print(f"{k:5d}  {value:10.4f}  {s.T.mean():.3f}   {10 * np.log10(1 / mse):.2f} dB")

# The raw analytic transmission of every stage is kept for inspection
for k, t in enumerate(trace.raw_transmissions, start=1):
    print(f"stage {k}: raw T in [{t.min():.3f}, {t.max():.3f}]")
