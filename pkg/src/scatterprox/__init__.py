"""Learning-free proximal dehazing under the atmospheric scattering model.

The package provides closed-form proximal updates for airlight, transmission
and radiance, an unrolled stage iteration, a seeded non-uniform haze
synthesizer, and a residual-haze audit.
"""

from .audit import (
    AuditReport,
    BawWeights,
    airlight_tv,
    audit_dehazed,
    baw_weights,
    quality_gate,
    residual_haze_prior,
)
from .core import (
    T_MIN,
    ProximalWeights,
    ScatteringState,
    ShapeError,
    clamp_transmission,
    data_term,
    render_scattering,
)
from .proximal import (
    StageConfig,
    StageTrace,
    initial_state,
    prox_airlight,
    prox_radiance,
    prox_transmission,
    run_psar,
    run_stage,
)
from .refinement import RefinementOperator, refine_radiance, refine_transmission
from .synth import (
    AugmentSpec,
    NoiseFieldSpec,
    SynthesisOutput,
    SynthesisSpec,
    make_density_field,
    make_transmission,
    near_haze_depth_offset,
    procedural_depth,
    procedural_scene,
    sample_airlight,
    synthesize,
)

__version__ = "0.1.0"
