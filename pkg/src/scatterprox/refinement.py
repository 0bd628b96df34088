"""Classical residual refinements for the transmission and radiance updates.

Each refinement returns ``x + strength * (smooth(x) - x)``. The ``identity``
kind, or ``strength == 0``, returns its input unchanged.
"""

from dataclasses import dataclass

import numpy as np

from .core import as_rgb, as_scalar_field, check_same_size, gray

KINDS = ("identity", "guided_smooth", "tv_smooth")


@dataclass(frozen=True)
class RefinementOperator:
    """A smoothing operator plugged into the residual slot of a stage.

    ``radius`` is the window half-size for ``guided_smooth`` and the number of
    explicit flow steps for ``tv_smooth``; either way an output pixel only
    depends on inputs within ``radius`` pixels (Chebyshev distance).
    """

    kind: str = "identity"
    strength: float = 1.0
    radius: int = 2
    range_sigma: float = 0.1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown refinement kind {self.kind!r}; expected one of {KINDS}")
        if not self.strength >= 0:
            raise ValueError(f"strength must be nonnegative, got {self.strength!r}")
        if int(self.radius) != self.radius or self.radius < 1:
            raise ValueError(f"radius must be a positive integer, got {self.radius!r}")
        if not self.range_sigma > 0:
            raise ValueError(f"range_sigma must be positive, got {self.range_sigma!r}")

    @property
    def is_identity(self):
        return self.kind == "identity" or self.strength == 0


IDENTITY = RefinementOperator()


def guided_box_average(x, guide, radius, range_sigma):
    """Box-window average of ``x`` weighted by guide similarity.

    Each neighbour ``y`` of pixel ``p`` within the window contributes with weight
    ``exp(-(guide[y] - guide[p])**2 / (2 * range_sigma**2))``; neighbours outside
    the image are skipped.
    """
    h, w = x.shape
    xp = np.pad(x, radius)
    gp = np.pad(guide, radius)
    valid = np.pad(np.ones_like(x), radius)
    num = np.zeros_like(x)
    den = np.zeros_like(x)
    inv = 1.0 / (2.0 * range_sigma**2)
    for dy in range(2 * radius + 1):
        for dx in range(2 * radius + 1):
            g = gp[dy:dy + h, dx:dx + w]
            wgt = valid[dy:dy + h, dx:dx + w] * np.exp(-((g - guide) ** 2) * inv)
            num += wgt * xp[dy:dy + h, dx:dx + w]
            den += wgt
    return num / den


def tv_flow(x, steps, step_size=0.02, eps=0.1):
    """Explicit steps of the smoothed total-variation flow with replicate boundaries."""
    u = x.copy()
    for _ in range(steps):
        ux = np.diff(u, axis=1, append=u[:, -1:])
        uy = np.diff(u, axis=0, append=u[-1:, :])
        mag = np.sqrt(ux * ux + uy * uy + eps * eps)
        px, py = ux / mag, uy / mag
        # last column/row of px/py is zero, so this is the adjoint divergence
        div = np.diff(px, axis=1, prepend=0.0) + np.diff(py, axis=0, prepend=0.0)
        u = u + step_size * div
    return u


def _smooth(x, guide, op):
    if op.kind == "guided_smooth":
        return guided_box_average(x, guide, op.radius, op.range_sigma)
    return tv_flow(x, op.radius)


def refine_transmission(T_bar, J_prev, op=IDENTITY):
    """Residual refinement of the analytic transmission, guided by ``gray(J_prev)``.

    The caller clamps the result.
    """
    T_bar = as_scalar_field(T_bar, "T_bar")
    J_prev = as_rgb(J_prev, "J_prev")
    check_same_size(T_bar=T_bar, J_prev=J_prev)
    if op.is_identity:
        return T_bar.copy()
    smoothed = _smooth(T_bar, gray(J_prev), op)
    return T_bar + op.strength * (smoothed - T_bar)


def refine_radiance(J_bar, T_k, A_k, op=IDENTITY):
    """Residual refinement of the analytic radiance, smoothing each channel.

    ``guided_smooth`` steers every channel by ``gray(J_bar)``. ``T_k`` and
    ``A_k`` are accepted so a learned operator with the same signature can be
    dropped in; the classical smoothers do not use them.
    """
    J_bar = as_rgb(J_bar, "J_bar")
    T_k = as_scalar_field(T_k, "T_k")
    A_k = as_rgb(A_k, "A_k")
    check_same_size(J_bar=J_bar, T_k=T_k, A_k=A_k)
    if op.is_identity:
        return J_bar.copy()
    guide = gray(J_bar)
    smoothed = np.stack([_smooth(J_bar[..., c], guide, op) for c in range(3)], axis=-1)
    return J_bar + op.strength * (smoothed - J_bar)
