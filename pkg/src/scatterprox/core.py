"""Domain types and the forward atmospheric scattering model.

Images are plain numpy arrays: RGB fields have shape ``(H, W, 3)`` and scalar
fields (transmission, depth, density, weights) have shape ``(H, W)``. All math
runs in float64.
"""

from dataclasses import dataclass

import numpy as np

T_MIN = 1e-3


class ShapeError(ValueError):
    """Raised when an input field has the wrong shape or does not match its peers."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


def as_rgb(image, name="image"):
    """Return ``image`` as a finite float64 ``(H, W, 3)`` array."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ShapeError(name, f"expected shape (H, W, 3), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: contains non-finite values")
    return arr


def as_scalar_field(field, name="field"):
    """Return ``field`` as a finite float64 ``(H, W)`` array."""
    arr = np.asarray(field, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(name, f"expected shape (H, W), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: contains non-finite values")
    return arr


def check_same_size(**fields):
    """Raise ShapeError naming the first field whose ``(H, W)`` differs from the first one."""
    items = list(fields.items())
    ref_name, ref = items[0]
    for name, arr in items[1:]:
        if arr.shape[:2] != ref.shape[:2]:
            raise ShapeError(
                name, f"size {arr.shape[:2]} does not match {ref_name} size {ref.shape[:2]}"
            )


def clamp_transmission(T, t_min=T_MIN):
    return np.clip(T, t_min, 1.0)


def gray(image):
    """Channel mean, used as luminance throughout."""
    return np.asarray(image, dtype=np.float64).mean(axis=2)


def constant_rgb(height, width, value):
    """Broadcast a scalar or RGB triple to a constant ``(H, W, 3)`` field."""
    value = np.broadcast_to(np.asarray(value, dtype=np.float64), (3,))
    return np.tile(value, (height, width, 1))


@dataclass(frozen=True)
class ScatteringState:
    """The (radiance, transmission, airlight) triple passed between stages."""

    J: np.ndarray
    T: np.ndarray
    A: np.ndarray

    def __post_init__(self):
        J = as_rgb(self.J, "J")
        T = as_scalar_field(self.T, "T")
        A = as_rgb(self.A, "A")
        check_same_size(J=J, T=T, A=A)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "A", A)

    @property
    def shape(self):
        return self.T.shape


@dataclass(frozen=True)
class ProximalWeights:
    """Trust-region strengths of the airlight, transmission and radiance updates."""

    lambda_A: float = 0.1
    lambda_T: float = 0.1
    lambda_J: float = 0.1

    def __post_init__(self):
        for name in ("lambda_A", "lambda_T", "lambda_J"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")


def render_scattering(J, T, A, clip=True):
    """Render a hazy observation ``P = T*J + (1 - T)*A``.

    Parameters
    ----------
    J : array_like, shape (H, W, 3)
        Scene radiance.
    T : array_like, shape (H, W)
        Transmission in [0, 1].
    A : array_like, shape (H, W, 3)
        Airlight field.
    clip : bool
        Clamp the result to [0, 1]. Pass False to get the raw blend.

    Returns
    -------
    numpy.ndarray, shape (H, W, 3)
    """
    J = as_rgb(J, "J")
    T = as_scalar_field(T, "T")
    A = as_rgb(A, "A")
    check_same_size(J=J, T=T, A=A)
    if T.min() < 0.0 or T.max() > 1.0:
        raise ValueError("T: transmission must lie in [0, 1]")
    t = T[..., None]
    P = t * J + (1.0 - t) * A
    return np.clip(P, 0.0, 1.0) if clip else P


def scattering_residual(P, J, T, A):
    """Per-pixel RGB residual ``P - T*J - (1 - T)*A``."""
    t = T[..., None]
    return P - t * J - (1.0 - t) * A


def data_term(P, state):
    """Half the squared mismatch between ``P`` and the scattering model of ``state``."""
    P = as_rgb(P, "P")
    check_same_size(P=P, J=state.J)
    r = scattering_residual(P, state.J, state.T, state.A)
    return 0.5 * float(np.sum(r * r))
