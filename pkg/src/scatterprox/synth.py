"""Online non-uniform haze synthesis.

Random draws come from one ``numpy.random.Generator`` in a fixed order:
augmentation, base density, non-uniform coin, noise field (non-uniform branch
only), near-haze level, airlight. Equal seeds give bit-identical outputs.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .core import (
    ShapeError,
    as_rgb,
    as_scalar_field,
    check_same_size,
    constant_rgb,
)

EPS = 1e-6


@dataclass(frozen=True)
class NoiseFieldSpec:
    base_resolution: int = 16
    sigma0: float = 1.0
    sigma1: float = 8.0
    rescale_min: float = 0.0
    rescale_max: float = 0.8

    def __post_init__(self):
        if self.base_resolution < 2:
            raise ValueError("base_resolution must be at least 2")
        if self.sigma0 < 0 or self.sigma1 < 0:
            raise ValueError("blur sigmas must be nonnegative")
        if not 0 <= self.rescale_min <= self.rescale_max:
            raise ValueError("need 0 <= rescale_min <= rescale_max")


@dataclass(frozen=True)
class AugmentSpec:
    """Clean-image augmentation.

    The exposure factor is drawn from ``U(1 - luminance_jitter, 1 + luminance_jitter)``
    and the noise std from ``U(0, noise_std)``. Both draws always happen, so
    zero settings disable augmentation without shifting later random draws.
    """

    luminance_jitter: float = 0.0
    noise_std: float = 0.0
    enable_compress: bool = False

    def __post_init__(self):
        if self.luminance_jitter < 0 or self.noise_std < 0:
            raise ValueError("augmentation magnitudes must be nonnegative")


@dataclass(frozen=True)
class SynthesisSpec:
    beta_min: float = 0.3
    beta_max: float = 1.5
    nonuniform_prob: float = 0.5
    near_haze_min: float = 0.0
    near_haze_max: float = 0.4
    airlight_min: float = 0.6
    airlight_max: float = 0.95
    airlight_jitter: float = 0.05
    noise: NoiseFieldSpec = field(default_factory=NoiseFieldSpec)
    augment: AugmentSpec = field(default_factory=AugmentSpec)
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.beta_min <= self.beta_max:
            raise ValueError("need 0 < beta_min <= beta_max")
        if not 0 <= self.nonuniform_prob <= 1:
            raise ValueError("nonuniform_prob must lie in [0, 1]")
        if not 0 <= self.near_haze_min <= self.near_haze_max < 1:
            raise ValueError("need 0 <= near_haze_min <= near_haze_max < 1")
        if not 0 <= self.airlight_min <= self.airlight_max <= 1:
            raise ValueError("need 0 <= airlight_min <= airlight_max <= 1")
        if self.airlight_jitter < 0:
            raise ValueError("airlight_jitter must be nonnegative")


@dataclass
class SynthesisOutput:
    hazy: np.ndarray
    transmission: np.ndarray
    airlight: np.ndarray
    density: np.ndarray
    d0: float
    clean: np.ndarray
    hazy_raw: np.ndarray
    params: dict


def _check_size(width, height):
    if width < 2 or height < 2:
        raise ShapeError("size", f"image must be at least 2x2, got {width}x{height}")


def _upsample_bilinear(z, height, width):
    """Bilinear resize with corner pixels aligned."""
    gh, gw = z.shape
    yy = np.linspace(0.0, gh - 1.0, height)
    xx = np.linspace(0.0, gw - 1.0, width)
    coords = np.meshgrid(yy, xx, indexing="ij")
    return ndimage.map_coordinates(z, coords, order=1, mode="nearest")


def minmax_rescale(x, lo, hi):
    """Affine map of ``x`` onto ``[lo, hi]``; a constant input maps to ``lo``."""
    xmin, xmax = x.min(), x.max()
    if xmax - xmin <= 0:
        return np.full_like(x, lo)
    out = (x - xmin) / (xmax - xmin) * (hi - lo) + lo
    out[x == xmax] = hi
    return out


def noise_perturbation(noise, width, height, rng):
    """Smooth nonnegative density perturbation from blurred, upsampled white noise."""
    _check_size(width, height)
    # low-res grid follows the image aspect ratio
    scale = noise.base_resolution / max(width, height)
    gh = max(2, int(round(height * scale)))
    gw = max(2, int(round(width * scale)))
    z0 = rng.standard_normal((gh, gw))
    z = ndimage.gaussian_filter(z0, noise.sigma0, mode="reflect")
    z = _upsample_bilinear(z, height, width)
    z = ndimage.gaussian_filter(z, noise.sigma1, mode="reflect")
    return minmax_rescale(z, noise.rescale_min, noise.rescale_max)


def make_density_field(spec, width, height, rng, beta_init=None):
    """Scattering density map: ``beta_init`` plus, with probability p, a smooth perturbation.

    ``beta_init`` is drawn from the spec's range unless given.

    Returns
    -------
    density : numpy.ndarray, shape (height, width)
    beta_init : float
    nonuniform : bool
    """
    _check_size(width, height)
    if beta_init is None:
        beta_init = float(rng.uniform(spec.beta_min, spec.beta_max))
    nonuniform = bool(rng.random() < spec.nonuniform_prob)
    density = np.full((height, width), beta_init)
    if nonuniform:
        density = density + noise_perturbation(spec.noise, width, height, rng)
    return density, beta_init, nonuniform


def near_haze_depth_offset(beta_init, h_near, eps=EPS):
    """Depth offset that gives haze level ``h_near`` at the nearest depth."""
    if not beta_init > 0:
        raise ValueError(f"beta_init must be positive, got {beta_init!r}")
    if not 0 <= h_near < 1:
        raise ValueError(f"h_near must lie in [0, 1), got {h_near!r}")
    return -np.log1p(-h_near) / (beta_init + eps)


def make_transmission(density, depth, d0):
    """``exp(-beta * ((1 - D) + d0))`` with depth D = 1 nearest, 0 farthest."""
    density = as_scalar_field(density, "density")
    depth = as_scalar_field(depth, "depth")
    check_same_size(density=density, depth=depth)
    if density.min() < 0:
        raise ValueError("density: must be nonnegative")
    if depth.min() < 0 or depth.max() > 1:
        raise ValueError("depth: must be normalized to [0, 1]")
    if d0 < 0:
        raise ValueError("d0 must be nonnegative")
    return np.exp(-density * ((1.0 - depth) + d0))


def sample_airlight(spec, rng, width=1, height=1):
    """Constant airlight field: one scalar base plus per-channel jitter, clipped to [0, 1]."""
    base = rng.uniform(spec.airlight_min, spec.airlight_max)
    jitter = rng.uniform(-spec.airlight_jitter, spec.airlight_jitter, size=3)
    rgb = np.clip(base + jitter, 0.0, 1.0)
    return constant_rgb(height, width, rgb)


def augment_clean(J, augment, rng):
    """Exposure scaling followed by additive Gaussian noise, clipped to [0, 1]."""
    gain = rng.uniform(1.0 - augment.luminance_jitter, 1.0 + augment.luminance_jitter)
    sigma = rng.uniform(0.0, augment.noise_std)
    noise = rng.standard_normal(J.shape)
    return np.clip(J * gain + sigma * noise, 0.0, 1.0), {"gain": gain, "noise_sigma": sigma}


def compress_proxy(P):
    """8-bit quantize/dequantize round trip."""
    return np.round(np.clip(P, 0.0, 1.0) * 255.0) / 255.0


def synthesize(J_gt, depth, spec, rng=None):
    """Render a hazy observation of ``J_gt`` and return every intermediate.

    ``rng`` defaults to ``numpy.random.default_rng(spec.seed)``.
    """
    J_gt = as_rgb(J_gt, "J_gt")
    depth = as_scalar_field(depth, "depth")
    check_same_size(J_gt=J_gt, depth=depth)
    height, width = depth.shape
    _check_size(width, height)
    if rng is None:
        rng = np.random.default_rng(spec.seed)

    J_aug, aug_params = augment_clean(J_gt, spec.augment, rng)
    density, beta_init, nonuniform = make_density_field(spec, width, height, rng)
    h_near = float(rng.uniform(spec.near_haze_min, spec.near_haze_max))
    d0 = near_haze_depth_offset(beta_init, h_near)
    T = make_transmission(density, depth, d0)
    A = sample_airlight(spec, rng, width, height)

    t = T[..., None]
    P_raw = t * J_aug + (1.0 - t) * A
    P = compress_proxy(P_raw) if spec.augment.enable_compress else np.clip(P_raw, 0.0, 1.0)

    params = {
        "seed": spec.seed,
        "beta_init": beta_init,
        "nonuniform": nonuniform,
        "h_near": h_near,
        "d0": d0,
        "airlight": A[0, 0].tolist(),
        **aug_params,
    }
    return SynthesisOutput(
        hazy=P,
        transmission=T,
        airlight=A,
        density=density,
        d0=d0,
        clean=J_aug,
        hazy_raw=P_raw,
        params=params,
    )


def procedural_depth(height, width, mode="vertical"):
    """Normalized depth maps for self-contained runs (1 = near, 0 = far).

    ``vertical``: far at the top row, near at the bottom row.
    ``radial``: near at the image centre.
    ``two-plane``: far upper half (sky/background), ground plane ramping to near.
    """
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    v = yy / max(height - 1, 1)
    if mode == "vertical":
        return v
    if mode == "radial":
        cy, cx = (height - 1) / 2.0, (width - 1) / 2.0
        r = np.hypot((yy - cy) / max(cy, 1), (xx - cx) / max(cx, 1)) / np.sqrt(2.0)
        return np.clip(1.0 - r, 0.0, 1.0)
    if mode == "two-plane":
        horizon = 0.5
        return np.where(v < horizon, 0.1, 0.1 + 0.9 * (v - horizon) / (1.0 - horizon))
    raise ValueError(f"unknown depth mode {mode!r}")


def procedural_scene(height, width, rng):
    """A colourful clean test image: smooth colour gradients, rectangles and texture."""
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    yy /= max(height - 1, 1)
    xx /= max(width - 1, 1)
    c0, c1, c2 = rng.uniform(0.05, 0.95, size=(3, 3))
    img = c0 * (1 - yy[..., None]) + c1 * yy[..., None] * (1 - xx[..., None]) + c2 * (yy * xx)[..., None]
    img = img / max(img.max(), 1.0)
    for _ in range(int(rng.integers(6, 12))):
        y0, x0 = rng.uniform(0, 0.85, size=2)
        hh, ww = rng.uniform(0.08, 0.35, size=2)
        mask = (yy >= y0) & (yy < y0 + hh) & (xx >= x0) & (xx < x0 + ww)
        img[mask] = rng.uniform(0.02, 0.98, size=3)
    texture = rng.standard_normal((height, width))
    texture = ndimage.gaussian_filter(texture, 1.0)
    texture /= max(np.abs(texture).max(), 1e-12)
    img = img * (1.0 + 0.15 * texture[..., None])
    return np.clip(img, 0.0, 1.0)
