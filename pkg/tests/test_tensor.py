import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wel import catalog
from wel.errors import FrameError, NotPositiveDefiniteError, TraceError
from wel.metric import curvature_at
from wel.singer_thorpe import STData, build
from wel.tensor import (
    BivectorFrame, bivector_inner, bivector_matrix, check_positive_definite, constant_curvature_tensor,
    jacobi_eigh, kulkarni_nomizu, signed_permutations, sym_eigen, symmetry_defects, triple_contract,
    weyl_blocks, weyl_from_blocks, weyl_from_riemann,
)


def random_spd(rng, n):
    a = rng.normal(size=(n, n))
    return a @ a.T + n * np.eye(n)


def random_traceless_sym(rng):
    a = rng.normal(size=(3, 3))
    a = a + a.T
    return a - np.trace(a) / 3 * np.eye(3)


@pytest.mark.parametrize("n", [2, 3, 4, 6])
def test_jacobi_matches_numpy(rng, n):
    a = rng.normal(size=(n, n))
    a = a + a.T
    vals, vecs = jacobi_eigh(a)
    np.testing.assert_allclose(vals, np.linalg.eigvalsh(a), atol=1e-12)
    np.testing.assert_allclose(a @ vecs, vecs * vals, atol=1e-11)


def test_identity_eigen():
    vals, frame = sym_eigen(np.eye(4), np.eye(4))
    np.testing.assert_allclose(vals, [1, 1, 1, 1])


def test_ricci_spectrum_example():
    vals, _ = sym_eigen(np.diag([-3.0, 1, -1, -1]), np.eye(4))
    np.testing.assert_allclose(vals, [-3, -1, -1, 1])


def test_eps_einstein_spectrum(rng):
    chart = catalog.eps_chart(1.0)
    for x in chart.sample(5, rng):
        p = curvature_at(chart, x)
        vals, _ = sym_eigen(p.einstein, p.g)
        np.testing.assert_allclose(vals, [-2, 0, 0, 2], atol=1e-10)


def test_generalized_eigen_properties(rng):
    for _ in range(20):
        g = random_spd(rng, 4)
        m = rng.normal(size=(4, 4))
        m = m + m.T
        vals, frame = sym_eigen(m, g)
        np.testing.assert_allclose(frame.T @ g @ frame, np.eye(4), atol=1e-10)
        assert np.abs(m @ frame - g @ frame * vals).max() <= 1e-10 * np.abs(m).max() * 10
        assert np.all(np.diff(vals) >= 0)


def test_not_positive_definite():
    with pytest.raises(NotPositiveDefiniteError):
        check_positive_definite(np.diag([1.0, -1.0, 1.0]))
    with pytest.raises(NotPositiveDefiniteError):
        sym_eigen(np.eye(2), np.diag([1.0, 0.0]))


def test_bivector_frame_norms():
    bf = BivectorFrame.standard()
    for b in bf.plus + bf.minus:
        assert bivector_inner(b, b) == pytest.approx(2.0)
    for a in bf.plus:
        for b in bf.minus:
            assert bivector_inner(a, b) == pytest.approx(0.0)


def test_zero_weyl_blocks():
    wp, wm = weyl_blocks(np.zeros((4, 4, 4, 4)), np.eye(4), np.eye(4))
    assert not wp.any() and not wm.any()


def test_s2xs2_blocks():
    chart = catalog.s2xs2(1.0, 1.0)
    p = curvature_at(chart, np.array([1.0, 0.3, 1.2, -0.4]))
    _, frame = sym_eigen(p.g, p.g)
    frame = frame if np.linalg.det(frame) > 0 else frame * np.array([1, 1, 1, -1])
    for blk in weyl_blocks(p.weyl, p.g, frame):
        np.testing.assert_allclose(np.linalg.eigvalsh(blk), [-1 / 3, -1 / 3, 2 / 3], atol=1e-10)


def test_chb_ii_blocks():
    s = 24.0
    data = STData.case_c(s, 1.0, (-s / 4, s / 4, 0.0), 0.0)
    R = build(data)
    W = weyl_from_riemann(R, np.eye(4))
    wp, wm = weyl_blocks(W, np.eye(4), np.eye(4))
    np.testing.assert_allclose(24 * np.diag(wp), np.array([-8, 4, 4]) * s, atol=1e-9)
    np.testing.assert_allclose(24 * np.diag(wm), np.array([4, -8, 4]) * s, atol=1e-9)


def test_frame_checks():
    W = np.zeros((4, 4, 4, 4))
    with pytest.raises(FrameError):
        weyl_blocks(W, np.eye(4), np.diag([1, 1, 1, -1.0]))
    with pytest.raises(FrameError):
        weyl_blocks(W, np.eye(4), 2 * np.eye(4))
    with pytest.raises(TraceError):
        weyl_blocks(constant_curvature_tensor(np.eye(4)), np.eye(4), np.eye(4))


def test_triple_contract_flat_and_sphere():
    g = np.eye(4)
    assert not triple_contract(np.zeros((4, 4, 4, 4)), g).any()
    np.testing.assert_allclose(triple_contract(constant_curvature_tensor(g), g), 6 * g, atol=1e-14)


def test_triple_contract_brute_force(rng):
    g = random_spd(rng, 4)
    R = build(STData.case_b(3.0, 0.7, -0.2, (0.1, 0.3, -0.4)))
    gi = np.linalg.inv(g)
    T = triple_contract(R, g)
    brute = np.zeros((4, 4))
    for i, j in itertools.product(range(4), repeat=2):
        for k, p, q, a, b, c in itertools.product(range(4), repeat=6):
            brute[i, j] += R[i, k, p, q] * R[j, a, b, c] * gi[k, a] * gi[p, b] * gi[q, c]
    np.testing.assert_allclose(T, brute, atol=1e-10)


def test_triple_contract_eps_proportional(rng):
    chart = catalog.eps_chart(1.0)
    x = chart.sample(1, rng)[0]
    p = curvature_at(chart, x)
    T = triple_contract(p.riemann, p.g)
    assert np.abs(T - np.trace(np.linalg.inv(p.g) @ T) / 4 * p.g).max() < 1e-8


def test_triple_contract_scaling(rng):
    g = random_spd(rng, 4)
    R = build(STData.case_c(2.0, 0.5, (0.2, -0.1, -0.1), 0.3))
    k2 = 3.7
    np.testing.assert_allclose(triple_contract(k2 * R, k2 * g), triple_contract(R, g) / k2, rtol=1e-12)


def test_kulkarni_nomizu_sphere_symmetries():
    R = 0.5 * kulkarni_nomizu(np.eye(4), np.eye(4))
    assert R[0, 1, 0, 1] == pytest.approx(1.0)
    assert max(symmetry_defects(R).values()) < 1e-15


@given(st.integers(0, 2**32 - 1))
def test_split_is_exhaustive(seed):
    rng = np.random.default_rng(seed)
    a, b = random_traceless_sym(rng), random_traceless_sym(rng)
    W = weyl_from_blocks(a, b)
    m = bivector_matrix(W, np.eye(4))
    full = np.zeros((6, 6))
    full[:3, :3], full[3:, 3:] = a, b
    np.testing.assert_allclose(m, full, atol=1e-9)
    wp, wm = weyl_blocks(W, np.eye(4), np.eye(4))
    np.testing.assert_allclose(wp, a, atol=1e-12)
    np.testing.assert_allclose(wm, b, atol=1e-12)


@given(st.integers(0, 2**32 - 1), st.integers(0, 191))
def test_signed_permutation_same_for_both_signs(seed, k):
    rng = np.random.default_rng(seed)
    dp = rng.normal(size=3)
    dp -= dp.mean()
    dm = rng.normal(size=3)
    dm -= dm.mean()
    W = weyl_from_blocks(np.diag(dp), np.diag(dm))
    P = signed_permutations()[k % len(signed_permutations())]
    wp, wm = weyl_blocks(W, np.eye(4), P)
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(wp)), np.sort(dp), atol=1e-10)
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(wm)), np.sort(dm), atol=1e-10)
    # the same 3-permutation moves both diagonals
    perms = [s for s in itertools.permutations(range(3)) if np.allclose(np.diag(wp), dp[list(s)], atol=1e-10)]
    assert any(np.allclose(np.diag(wm), dm[list(s)], atol=1e-10) for s in perms)
