"""Residual-haze audit of a dehazed image, airlight smoothness, and the strict quality gate."""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import as_rgb, as_scalar_field, check_same_size, gray
from .proximal import StageConfig, run_psar

T_TARGET = 0.9
EPS = 1e-6


def minmax_normalize(x):
    """Map ``x`` onto [0, 1]; a constant field maps to all zeros."""
    lo, hi = x.min(), x.max()
    if hi - lo <= 0:
        return np.zeros_like(x)
    out = (x - lo) / (hi - lo)
    out[x == hi] = 1.0
    return out


def forward_gradient(x):
    """Forward differences along rows and columns; the last row/column difference is zero."""
    gx = np.diff(x, axis=1, append=x[:, -1:])
    gy = np.diff(x, axis=0, append=x[-1:, :])
    return gx, gy


@dataclass
class BawWeights:
    w_dist: np.ndarray
    w_tex: np.ndarray
    w_high: np.ndarray
    combined: np.ndarray


def baw_weights(J, A_hat):
    """Brightness-and-airlight weight map.

    ``w_dist`` favours pixels far from the estimated airlight, ``w_tex`` favours
    textured pixels, ``w_high`` suppresses the brightest pixels. The combined
    map is ``max(w_dist, w_tex) * w_dist * w_high``.
    """
    J = as_rgb(J, "J")
    A_hat = as_rgb(A_hat, "A_hat")
    check_same_size(J=J, A_hat=A_hat)
    w_dist = minmax_normalize(np.mean(np.abs(J - A_hat), axis=2))
    gx, gy = forward_gradient(gray(J))
    w_tex = minmax_normalize(np.hypot(gx, gy))
    w_high = 1.0 - minmax_normalize(J.max(axis=2))
    combined = np.maximum(w_dist, w_tex) * w_dist * w_high
    return BawWeights(w_dist=w_dist, w_tex=w_tex, w_high=w_high, combined=combined)


def residual_haze_prior(T_hat, weights, t_target=T_TARGET, eps=EPS):
    """Weighted mean shortfall of ``T_hat`` below ``t_target``.

    ``weights`` is a :class:`BawWeights` or a plain weight array.
    """
    if not 0 < t_target <= 1:
        raise ValueError(f"t_target must lie in (0, 1], got {t_target!r}")
    W = weights.combined if isinstance(weights, BawWeights) else weights
    T_hat = as_scalar_field(T_hat, "T_hat")
    W = as_scalar_field(W, "weights")
    check_same_size(T_hat=T_hat, weights=W)
    hinge = np.maximum(0.0, t_target - T_hat)
    return float(np.sum(W * hinge) / (np.sum(np.abs(W)) + eps))


def airlight_tv(A):
    """Anisotropic total variation of an RGB field (forward differences, replicate boundary)."""
    A = as_rgb(A, "A")
    gx = np.diff(A, axis=1)
    gy = np.diff(A, axis=0)
    return float(np.abs(gx).sum() + np.abs(gy).sum())


def quality_gate(teacher_scores, student_scores):
    """True iff the teacher beats the student strictly on every criterion (higher is better)."""
    teacher = list(teacher_scores)
    student = list(student_scores)
    if len(teacher) != len(student):
        raise ValueError(f"score length mismatch: {len(teacher)} vs {len(student)}")
    if not teacher:
        raise ValueError("score sequences must be nonempty")
    return all(t > s for t, s in zip(teacher, student))


@dataclass
class AuditReport:
    residual_haze_score: float
    t_hat_min: float
    t_hat_median: float
    t_hat_mean: float
    weight_coverage: float
    airlight_tv: float

    def to_lines(self):
        return [f"{k}={v!r}" for k, v in self.__dict__.items()]


def audit_dehazed(J_theta, config=StageConfig(), t_target=T_TARGET, return_fields=False):
    """Re-run the stage iteration on a dehazed image and score the haze it still finds.

    With ``return_fields=True`` also returns ``(state, weights)``.
    """
    J_theta = as_rgb(J_theta, "J_theta")
    state, _ = run_psar(J_theta, config)
    weights = baw_weights(J_theta, state.A)
    T_hat = state.T
    report = AuditReport(
        residual_haze_score=residual_haze_prior(T_hat, weights, t_target),
        t_hat_min=float(T_hat.min()),
        t_hat_median=float(np.median(T_hat)),
        t_hat_mean=float(T_hat.mean()),
        weight_coverage=float(np.mean(weights.combined > 0.1)),
        airlight_tv=airlight_tv(state.A),
    )
    if return_fields:
        return report, state, weights
    return report


def local_contrast_score(image, radius=3):
    """Mean local standard deviation of luminance, a cheap no-reference sharpness score."""
    g = gray(as_rgb(image, "image"))
    size = 2 * radius + 1
    mean = ndimage.uniform_filter(g, size, mode="reflect")
    sq = ndimage.uniform_filter(g * g, size, mode="reflect")
    return float(np.mean(np.sqrt(np.maximum(sq - mean * mean, 0.0))))


def gradient_energy_score(image):
    """Mean squared forward-gradient magnitude of luminance."""
    gx, gy = forward_gradient(gray(as_rgb(image, "image")))
    return float(np.mean(gx * gx + gy * gy))


DEFAULT_SCORERS = (local_contrast_score, gradient_energy_score)
