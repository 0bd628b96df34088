"""Closed-form proximal updates and the unrolled stage iteration.

Every update minimises the scattering data term in one block (airlight,
transmission or radiance) plus a quadratic penalty ``lam/2 * ||x - x_prev||^2``.
The problems are separable per pixel, so each update is a handful of array ops.
"""

from dataclasses import dataclass, field

import numpy as np

from .core import (
    ProximalWeights,
    ScatteringState,
    as_rgb,
    as_scalar_field,
    check_same_size,
    clamp_transmission,
    constant_rgb,
    data_term,
)
from .refinement import IDENTITY, RefinementOperator, refine_radiance, refine_transmission

INIT_AIRLIGHT = 0.9
INIT_TRANSMISSION = 0.5


def _check_lambda(name, value):
    if not (np.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")


def _inputs(P, J_prev, T, A):
    P = as_rgb(P, "P")
    J_prev = as_rgb(J_prev, "J_prev")
    T = as_scalar_field(T, "T")
    A = as_rgb(A, "A")
    check_same_size(P=P, J_prev=J_prev, T=T, A=A)
    return P, J_prev, T, A


def prox_airlight(P, J_prev, T_prev, A_prev, lambda_A):
    """Airlight update with radiance and transmission held at the previous iterate."""
    _check_lambda("lambda_A", lambda_A)
    P, J_prev, T_prev, A_prev = _inputs(P, J_prev, T_prev, A_prev)
    s = (1.0 - T_prev)[..., None]
    t = T_prev[..., None]
    return (s * (P - J_prev * t) + lambda_A * A_prev) / (s * s + lambda_A)


def prox_transmission(P, J_prev, T_prev, A_k, lambda_T):
    """Transmission update given the new airlight.

    Returns the raw minimiser; it may leave [0, 1] and is clamped later in the stage.
    """
    _check_lambda("lambda_T", lambda_T)
    P, J_prev, T_prev, A_k = _inputs(P, J_prev, T_prev, A_k)
    d = A_k - J_prev
    num = lambda_T * T_prev + np.sum(d * (A_k - P), axis=2)
    den = lambda_T + np.sum(d * d, axis=2)
    return num / den


def prox_radiance(P, J_prev, T_k, A_k, lambda_J):
    """Radiance update given the current transmission and airlight."""
    _check_lambda("lambda_J", lambda_J)
    P, J_prev, T_k, A_k = _inputs(P, J_prev, T_k, A_k)
    t = T_k[..., None]
    return (t * P + t * t * A_k - t * A_k + lambda_J * J_prev) / (t * t + lambda_J)


@dataclass(frozen=True)
class StageConfig:
    num_stages: int = 4
    weights: ProximalWeights = field(default_factory=ProximalWeights)
    refine_T: RefinementOperator = IDENTITY
    refine_J: RefinementOperator = IDENTITY
    record_objective: bool = True
    record_states: bool = False

    def __post_init__(self):
        if int(self.num_stages) != self.num_stages or self.num_stages < 0:
            raise ValueError(f"num_stages must be a nonnegative integer, got {self.num_stages!r}")


@dataclass
class StageTrace:
    """Per-stage record of a run.

    ``data_terms[0]`` and ``states[0]`` describe the initial state; entry ``k``
    describes the state after stage ``k``. ``raw_transmissions[k-1]`` is the
    unclamped analytic transmission of stage ``k``.
    """

    data_terms: list = field(default_factory=list)
    states: list = field(default_factory=list)
    raw_transmissions: list = field(default_factory=list)


def initial_state(P):
    """Start from the observation: ``J = P``, constant airlight 0.9, transmission 0.5."""
    P = as_rgb(P, "P")
    h, w = P.shape[:2]
    return ScatteringState(
        J=P.copy(),
        T=np.full((h, w), INIT_TRANSMISSION),
        A=constant_rgb(h, w, INIT_AIRLIGHT),
    )


def run_stage(P, state, config=StageConfig(), raw_out=None):
    """Apply one stage: airlight, then transmission (refined, clamped), then radiance (refined).

    If ``raw_out`` is a list, the unclamped analytic transmission is appended to it.
    """
    w = config.weights
    A_k = prox_airlight(P, state.J, state.T, state.A, w.lambda_A)
    T_bar = prox_transmission(P, state.J, state.T, A_k, w.lambda_T)
    if raw_out is not None:
        raw_out.append(T_bar)
    T_k = clamp_transmission(refine_transmission(T_bar, state.J, config.refine_T))
    J_bar = prox_radiance(P, state.J, T_k, A_k, w.lambda_J)
    J_k = refine_radiance(J_bar, T_k, A_k, config.refine_J)
    return ScatteringState(J=J_k, T=T_k, A=A_k)


def run_psar(P, config=StageConfig(), init=None):
    """Run ``config.num_stages`` stages from :func:`initial_state` (or ``init``).

    Returns
    -------
    state : ScatteringState
        Final, unclamped estimates. Clip ``state.J`` to [0, 1] before saving.
    trace : StageTrace
    """
    P = as_rgb(P, "P")
    state = initial_state(P) if init is None else init
    check_same_size(P=P, state=state.J)
    trace = StageTrace()

    def record(s):
        if config.record_objective:
            trace.data_terms.append(data_term(P, s))
        if config.record_states:
            trace.states.append(s)

    record(state)
    for _ in range(config.num_stages):
        state = run_stage(P, state, config, raw_out=trace.raw_transmissions)
        record(state)
    return state, trace
