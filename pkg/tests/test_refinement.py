import numpy as np
import pytest

from scatterprox import RefinementOperator, ShapeError, refine_radiance, refine_transmission
from scatterprox.refinement import guided_box_average, tv_flow

from oracles import naive_guided_average

SMOOTHERS = [
    RefinementOperator("guided_smooth", strength=1.0, radius=2),
    RefinementOperator("tv_smooth", strength=1.0, radius=3),
]


@pytest.fixture
def fields():
    rng = np.random.default_rng(0)
    return rng.uniform(size=(12, 13)), rng.uniform(size=(12, 13, 3)), rng.uniform(size=(12, 13, 3))


@pytest.mark.parametrize("op", [RefinementOperator(), RefinementOperator("guided_smooth", 0.0),
                                RefinementOperator("tv_smooth", 0.0)])
def test_identity_and_zero_strength(fields, op):
    T, J, A = fields
    np.testing.assert_array_equal(refine_transmission(T, J, op), T)
    np.testing.assert_array_equal(refine_radiance(J, T, A, op), J)


def test_guided_smooth_matches_naive_on_piecewise_constant():
    T = np.full((9, 10), 0.3)
    T[:, 5:] = 0.8
    J = np.full((9, 10, 3), 0.1)
    J[:, 5:] = 0.7
    op = RefinementOperator("guided_smooth", strength=1.0, radius=2, range_sigma=0.1)
    out = refine_transmission(T, J, op)
    ref = naive_guided_average(T, J.mean(axis=2), 2, 0.1)
    np.testing.assert_allclose(out, ref, atol=1e-6)
    # guide edges match the transmission edges, so the step survives
    assert np.max(np.abs(out - T)) < 1e-6


def test_guided_average_matches_naive_on_random_fields():
    rng = np.random.default_rng(1)
    x = rng.uniform(size=(7, 8))
    g = rng.uniform(size=(7, 8))
    np.testing.assert_allclose(guided_box_average(x, g, 2, 0.3), naive_guided_average(x, g, 2, 0.3), atol=1e-12)


@pytest.mark.parametrize("op", SMOOTHERS)
def test_constants_preserved(op):
    T = np.full((10, 10), 0.42)
    J = np.random.default_rng(2).uniform(size=(10, 10, 3))
    np.testing.assert_allclose(refine_transmission(T, J, op), T, atol=1e-12)
    Jc = np.full((10, 10, 3), 0.3)
    np.testing.assert_allclose(refine_radiance(Jc, T, J, op), Jc, atol=1e-12)


@pytest.mark.parametrize("op", SMOOTHERS)
def test_residual_scales_with_strength(fields, op):
    T, J, _ = fields
    full = refine_transmission(T, J, op) - T
    half = refine_transmission(T, J, RefinementOperator(op.kind, 0.5, op.radius)) - T
    np.testing.assert_allclose(half, 0.5 * full, atol=1e-12)


@pytest.mark.parametrize("op", SMOOTHERS)
def test_locality(op):
    rng = np.random.default_rng(3)
    T = rng.uniform(size=(15, 15))
    J = rng.uniform(size=(15, 15, 3))
    base = refine_transmission(T, J, op)
    T2 = T.copy()
    T2[7, 7] += 0.5
    J2 = J.copy()
    J2[7, 7] += 0.3
    changed = np.argwhere(refine_transmission(T2, J2, op) != base)
    assert changed.size > 0
    assert np.max(np.abs(changed - 7)) <= op.radius


def test_tv_flow_reduces_total_variation():
    x = np.random.default_rng(4).uniform(size=(16, 16))

    def tv(u):
        return np.abs(np.diff(u, axis=0)).sum() + np.abs(np.diff(u, axis=1)).sum()

    assert tv(tv_flow(x, 5)) < tv(x)
    assert tv_flow(x, 5).mean() == pytest.approx(x.mean(), abs=1e-12)


def test_refine_size_mismatch():
    op = SMOOTHERS[0]
    with pytest.raises(ShapeError):
        refine_transmission(np.zeros((4, 4)), np.zeros((4, 5, 3)), op)
    with pytest.raises(ShapeError):
        refine_radiance(np.zeros((4, 4, 3)), np.zeros((4, 4)), np.zeros((3, 4, 3)), op)


@pytest.mark.parametrize("kwargs", [{"kind": "unet"}, {"strength": -1}, {"radius": 0}, {"radius": 1.5}])
def test_operator_validation(kwargs):
    with pytest.raises(ValueError):
        RefinementOperator(**kwargs)
