import numpy as np
import pytest

from scatterprox import (
    ProximalWeights,
    ScatteringState,
    StageConfig,
    data_term,
    prox_airlight,
    prox_radiance,
    prox_transmission,
    render_scattering,
    run_psar,
    run_stage,
)
from scatterprox.core import T_MIN
from scatterprox.proximal import initial_state
from scatterprox.synth import procedural_scene

from oracles import (
    airlight_objective,
    as_images,
    radiance_objective,
    random_pixels,
    scan_minimize,
    transmission_objective,
)

N = 500


def test_airlight_keeps_previous_where_fully_transmissive():
    rng = np.random.default_rng(0)
    P, J, A, _, _ = as_images(*random_pixels(rng, 20))
    out = prox_airlight(P, J, np.ones((1, 20)), A, 0.3)
    np.testing.assert_allclose(out, A, atol=1e-15)


def test_airlight_vanishing_lambda_inverts_scattering():
    rng = np.random.default_rng(1)
    _, J, A_true, T, _ = random_pixels(rng, 50)
    T = T * 0.9
    P = J * T[:, None] + (1 - T[:, None]) * A_true
    out = prox_airlight(*as_images(P, J, T, rng.uniform(size=(50, 3))), 1e-12)
    np.testing.assert_allclose(out[0], A_true, atol=1e-6)


def test_airlight_matches_scan():
    rng = np.random.default_rng(2)
    P, J, A, T, lam = random_pixels(rng, N)
    for c in range(3):
        ref = scan_minimize(airlight_objective(P, J, T, A, lam, c), N, -2, 3)
        out = np.array([prox_airlight(*as_images(P[i:i+1], J[i:i+1], T[i:i+1], A[i:i+1]), lam[i])[0, 0, c]
                        for i in range(N)])
        np.testing.assert_allclose(out, ref, atol=2e-5)


def test_transmission_anchored_when_radiance_equals_airlight():
    rng = np.random.default_rng(3)
    P, J, _, T, _ = as_images(*random_pixels(rng, 20))
    out = prox_transmission(P, J, T, J.copy(), 0.4)
    np.testing.assert_allclose(out, T, atol=1e-15)


def test_transmission_vanishing_lambda_inverts_scattering():
    rng = np.random.default_rng(4)
    _, J, A, T_true, _ = random_pixels(rng, 200)
    keep = np.sum((A - J) ** 2, axis=1) > 0.01
    J, A, T_true = J[keep], A[keep], T_true[keep]
    P = J * T_true[:, None] + (1 - T_true[:, None]) * A
    out = prox_transmission(*as_images(P, J, rng.uniform(size=T_true.shape), A), 1e-12)
    np.testing.assert_allclose(out[0], T_true, atol=1e-6)


def test_transmission_matches_scan():
    rng = np.random.default_rng(5)
    P, J, A, T, lam = random_pixels(rng, 4 * N, lam_range=(0.1, 1.0))
    # keep instances whose minimiser provably lies in [-1, 2] (Cauchy-Schwarz bound)
    ok = np.linalg.norm(A - P, axis=1) / (2 * np.sqrt(lam)) <= 1.0
    P, J, A, T, lam = P[ok][:N], J[ok][:N], A[ok][:N], T[ok][:N], lam[ok][:N]
    n = len(lam)
    ref = scan_minimize(transmission_objective(P, J, A, T, lam), n, -1, 2)
    out = np.array([prox_transmission(*as_images(P[i:i+1], J[i:i+1], T[i:i+1], A[i:i+1]), lam[i])[0, 0]
                    for i in range(n)])
    np.testing.assert_allclose(out, ref, atol=2e-5)


def test_radiance_limits():
    rng = np.random.default_rng(6)
    P, J, A, _, _ = as_images(*random_pixels(rng, 20))
    np.testing.assert_allclose(prox_radiance(P, J, np.ones((1, 20)), A, 1e-12), P, atol=1e-9)
    np.testing.assert_allclose(prox_radiance(P, J, np.zeros((1, 20)), A, 0.7), J, atol=1e-15)


def test_radiance_matches_scan():
    rng = np.random.default_rng(7)
    P, J, A, T, lam = random_pixels(rng, N)
    for c in range(3):
        ref = scan_minimize(radiance_objective(P, J, T, A, lam, c), N, -2, 3)
        out = np.array([prox_radiance(*as_images(P[i:i+1], J[i:i+1], T[i:i+1], A[i:i+1]), lam[i])[0, 0, c]
                        for i in range(N)])
        np.testing.assert_allclose(out, ref, atol=2e-5)


@pytest.mark.parametrize("fn", [prox_airlight, prox_transmission, prox_radiance])
@pytest.mark.parametrize("lam", [0.0, -1.0, np.inf, np.nan])
def test_updates_reject_bad_lambda(fn, lam):
    x = np.zeros((2, 2, 3))
    with pytest.raises(ValueError):
        fn(x, x, np.zeros((2, 2)), x, lam)


@pytest.mark.parametrize("fn", [prox_airlight, prox_transmission, prox_radiance])
def test_updates_reject_size_mismatch(fn):
    x = np.zeros((2, 2, 3))
    with pytest.raises(ValueError):
        fn(x, np.zeros((2, 3, 3)), np.zeros((2, 2)), x, 0.1)


@pytest.mark.parametrize("fn,prev_index", [(prox_airlight, 3), (prox_transmission, 2), (prox_radiance, 1)])
def test_large_lambda_anchors_to_previous(fn, prev_index):
    rng = np.random.default_rng(8)
    P, J, A = rng.uniform(size=(3, 8, 8, 3))
    T = rng.uniform(size=(8, 8))
    args = (P, J, T, A)
    out = fn(*args, 1e8)
    assert np.max(np.abs(out - args[prev_index])) <= 1e-6


def _reference_stage(P, J, T, A, lam_a, lam_t, lam_j):
    """Straight-line per-pixel loop applying the three updates in order."""
    h, w = T.shape
    A_new = np.zeros_like(A)
    T_new = np.zeros_like(T)
    J_new = np.zeros_like(J)
    for y in range(h):
        for x in range(w):
            p, j, t, a = P[y, x], J[y, x], T[y, x], A[y, x]
            an = ((1 - t) * (p - j * t) + lam_a * a) / ((1 - t) ** 2 + lam_a)
            num = lam_t * t + sum((an[c] - j[c]) * (an[c] - p[c]) for c in range(3))
            den = lam_t + sum((an[c] - j[c]) ** 2 for c in range(3))
            tn = min(max(num / den, T_MIN), 1.0)
            jn = (tn * p + tn * tn * an - tn * an + lam_j * j) / (tn * tn + lam_j)
            A_new[y, x], T_new[y, x], J_new[y, x] = an, tn, jn
    return J_new, T_new, A_new


def test_stage_matches_reference_loop():
    rng = np.random.default_rng(9)
    P, J, A = rng.uniform(size=(3, 8, 8, 3))
    T = rng.uniform(0.05, 1, size=(8, 8))
    config = StageConfig(weights=ProximalWeights(0.2, 0.3, 0.05))
    out = run_stage(P, ScatteringState(J, T, A), config)
    J_ref, T_ref, A_ref = _reference_stage(P, J, T, A, 0.2, 0.3, 0.05)
    np.testing.assert_allclose(out.A, A_ref, atol=1e-12)
    np.testing.assert_allclose(out.T, T_ref, atol=1e-12)
    np.testing.assert_allclose(out.J, J_ref, atol=1e-12)


def test_stage_fixed_point_on_consistent_state():
    rng = np.random.default_rng(10)
    J, A = rng.uniform(size=(2, 6, 6, 3))
    T = rng.uniform(0.1, 0.95, size=(6, 6))
    P = render_scattering(J, T, A, clip=False)
    state = ScatteringState(J, T, A)
    out = run_stage(P, state)
    np.testing.assert_allclose(out.J, J, atol=1e-9)
    np.testing.assert_allclose(out.T, T, atol=1e-9)
    np.testing.assert_allclose(out.A, A, atol=1e-9)


def test_stage_descends_from_any_state():
    rng = np.random.default_rng(11)
    for _ in range(10):
        P, J, A = rng.uniform(size=(3, 10, 10, 3))
        state = ScatteringState(J, rng.uniform(size=(10, 10)), A)
        out = run_stage(P, state)
        assert data_term(P, out) <= data_term(P, state) + 1e-9


def test_stage_blocks_descend_individually():
    rng = np.random.default_rng(12)
    P, J, A = rng.uniform(size=(3, 10, 10, 3))
    T = rng.uniform(size=(10, 10))
    lam = 0.1
    d0 = data_term(P, ScatteringState(J, T, A))
    A1 = prox_airlight(P, J, T, A, lam)
    d1 = data_term(P, ScatteringState(J, T, A1))
    T1 = np.clip(prox_transmission(P, J, T, A1, lam), T_MIN, 1)
    d2 = data_term(P, ScatteringState(J, T1, A1))
    J1 = prox_radiance(P, J, T1, A1, lam)
    d3 = data_term(P, ScatteringState(J1, T1, A1))
    assert d1 <= d0 + 1e-9
    assert d2 <= d1 + 1e-9
    assert d3 <= d2 + 1e-9


def test_run_psar_zero_stages_returns_initial_state():
    P = np.random.default_rng(13).uniform(size=(5, 5, 3))
    state, trace = run_psar(P, StageConfig(num_stages=0))
    np.testing.assert_array_equal(state.J, P)
    np.testing.assert_array_equal(state.T, 0.5)
    np.testing.assert_array_equal(state.A, 0.9)
    assert len(trace.data_terms) == 1


def test_run_psar_trace_lengths():
    P = np.random.default_rng(14).uniform(size=(5, 5, 3))
    _, trace = run_psar(P, StageConfig(num_stages=3, record_states=True))
    assert len(trace.data_terms) == 4
    assert len(trace.states) == 4
    assert len(trace.raw_transmissions) == 3


def test_run_psar_trace_non_increasing():
    P = procedural_scene(32, 32, np.random.default_rng(15)) * 0.6 + 0.3
    _, trace = run_psar(P, StageConfig(num_stages=6))
    assert all(b <= a + 1e-9 for a, b in zip(trace.data_terms, trace.data_terms[1:]))


def test_initial_state_values():
    s = initial_state(np.zeros((2, 3, 3)))
    assert s.T.shape == (2, 3)
    assert np.all(s.A == 0.9) and np.all(s.T == 0.5)


# Frozen regression values: median final transmission for clean procedural
# scenes (seeds 0-4, 64x64, default settings). A clean input does not drive
# the transmission estimate to 1; it settles near 0.6-0.7.
CLEAN_T_MEDIANS = [0.67194, 0.65415, 0.70331, 0.71934, 0.6235]


@pytest.mark.parametrize("seed,expected", list(enumerate(CLEAN_T_MEDIANS)))
def test_clean_input_transmission_median_regression(seed, expected):
    J = procedural_scene(64, 64, np.random.default_rng(seed))
    state, _ = run_psar(J)
    assert float(np.median(state.T)) == pytest.approx(expected, abs=1e-5)
