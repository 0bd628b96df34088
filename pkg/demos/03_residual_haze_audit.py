"""
Auditing an image for residual haze
===================================

Re-run the stage iteration on an image and score how far the recovered
transmission falls below 0.9 in reliable regions. A hazier image scores higher.
"""

import numpy as np

from scatterprox import audit_dehazed, quality_gate, render_scattering
from scatterprox.audit import DEFAULT_SCORERS
from scatterprox.synth import procedural_scene

clean = procedural_scene(96, 96, np.random.default_rng(5))
A = np.full_like(clean, 0.9)

for t in (1.0, 0.7, 0.5, 0.3):
    img = render_scattering(clean, np.full((96, 96), t), A)
    report = audit_dehazed(img)
    print(f"T={t:.1f}  score={report.residual_haze_score:.4f}  "
          f"median T_hat={report.t_hat_median:.3f}  coverage={report.weight_coverage:.2f}  "
          f"airlight TV={report.airlight_tv:.2f}")

# The gate only lets a candidate through if it wins on every scorer
hazy = render_scattering(clean, np.full((96, 96), 0.5), A)
scores_clean = [f(clean) for f in DEFAULT_SCORERS]
scores_hazy = [f(hazy) for f in DEFAULT_SCORERS]
print("clean beats hazy on every scorer:", quality_gate(scores_clean, scores_hazy))
print("hazy beats clean on every scorer:", quality_gate(scores_hazy, scores_clean))
