from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wel.errors import STDataError
from wel.metric import pack_from_riemann
from wel.singer_thorpe import (STData, build, nine_case_table, random_stdata, row_stdata, table_csv_rows,
                               verify_we_algebraic)
from wel.tensor import (constant_curvature_tensor, kulkarni_nomizu, signed_permutations, to_frame,
                        weyl_blocks, weyl_from_blocks)
from wel.weakly_einstein import SIMPLE_EIGENVALUES


def recover(R):
    pack = pack_from_riemann(R, np.eye(4))
    wp, wm = weyl_blocks(pack.weyl, np.eye(4), np.eye(4))
    return pack.scalar, np.diag(pack.einstein), wp, wm


def test_zero_data():
    assert np.abs(build(STData.case_a((0, 0, 0, 0), (0, 0, 0)))).max() == 0.0


def test_case_c_row_i():
    _, _, wp, wm = recover(build(STData.case_c(24.0, 1.0, (0, 0, 0), 3.0)))
    np.testing.assert_allclose(sorted(np.diag(wp)), [-2, 1, 1], atol=1e-12)
    np.testing.assert_allclose(sorted(np.diag(wm)), [-2, 1, 1], atol=1e-12)


def test_case_b_example():
    _, _, wp, wm = recover(build(STData.case_b(12.0, 2.0, 1.0, (0, 0, 0))))
    np.testing.assert_allclose(sorted(np.diag(wp)), [-1, -1, 2], atol=1e-12)
    np.testing.assert_allclose(sorted(np.diag(wm)), [-1, -1, 2], atol=1e-12)


def test_invalid_data():
    with pytest.raises(STDataError):
        STData.case_a((1, 0, 0, 0), (0, 0, 0))
    with pytest.raises(STDataError):
        STData.case_b(1.0, 1.0, 0.5, (1, 0, 0))
    with pytest.raises(STDataError):
        STData("a", 1.0, (0, 0, 0, 0))
    with pytest.raises(STDataError):
        STData("b", 1.0, (-1, -1, 1, 1), xi=1.0)
    with pytest.raises(STDataError):
        STData("c", 1.0, (-1, -0.5, 0.5, 1))
    with pytest.raises(STDataError):
        STData("d", 0.0, (0, 0, 0, 0))


def test_random_builds_are_we():
    rng = np.random.default_rng(7)
    worst = max(verify_we_algebraic(build(random_stdata(rng))) for _ in range(1000))
    assert worst < 1e-11


def test_constant_curvature():
    assert verify_we_algebraic(constant_curvature_tensor(np.eye(4), 1.3)) < 1e-14


def random_algebraic(rng):
    h = rng.normal(size=(4, 4))
    h = h + h.T
    a = rng.normal(size=(3, 3))
    b = rng.normal(size=(3, 3))
    a = a + a.T - 2 * np.trace(a) / 3 * np.eye(3) / 2
    b = b + b.T - 2 * np.trace(b) / 3 * np.eye(3) / 2
    return kulkarni_nomizu(h, np.eye(4)) + weyl_from_blocks(a, b)


def test_perturbation_breaks_we():
    rng = np.random.default_rng(3)
    for _ in range(10):
        R = build(random_stdata(rng))
        P = random_algebraic(rng)
        P *= 0.1 / np.linalg.norm(P)
        assert verify_we_algebraic(R + P) > 1e-3


@given(st.integers(0, 10**6))
def test_round_trip(seed):
    data = random_stdata(np.random.default_rng(seed))
    s, e, wp, wm = recover(build(data))
    wpd, wmd = data.weyl_diagonals()
    assert abs(s - data.s) < 1e-12 * (1 + abs(data.s))
    np.testing.assert_allclose(e, data.e_diag, atol=1e-12 * (1 + abs(data.s)))
    np.testing.assert_allclose(wp, np.diag(wpd), atol=1e-12 * (1 + abs(data.s)))
    np.testing.assert_allclose(wm, np.diag(wmd), atol=1e-12 * (1 + abs(data.s)))


def test_table_exact():
    s = 24
    rows = nine_case_table(s)
    assert [r.label for r in rows] == ["i", "ii", "iii", "iv", "v", "vi", "vii", "viii", "ix"]
    by = {r.label: r for r in rows}
    assert by["i"].wplus == by["i"].wminus
    assert sorted(by["i"].wplus) == [Fraction(-2), Fraction(1), Fraction(1)]
    assert by["vi"].wplus == (-2, 4, -2) and by["vi"].wminus == (-2, -2, 4)
    for r in rows:
        assert all(isinstance(v, Fraction) for v in r.wplus + r.wminus + r.data)
        assert sorted(r.wplus) == sorted(r.wminus)
        assert r.sigma in (Fraction(-s, 3), Fraction(-s, 12), Fraction(s, 6))
        rest = sorted(r.wplus)
        rest.remove(r.sigma)
        assert rest == [-r.sigma / 2, -r.sigma / 2]


@given(st.floats(-50, 50).filter(lambda v: abs(v) > 1e-3))
def test_table_float_rows_build(s):
    for r in nine_case_table(s):
        R = build(row_stdata(r, s, lam=0.7))
        assert verify_we_algebraic(R) < 1e-11
        _, _, wp, wm = recover(R)
        scale = 1 + abs(s)
        np.testing.assert_allclose(np.diag(wp), r.wplus, atol=1e-12 * scale)
        np.testing.assert_allclose(np.diag(wm), r.wminus, atol=1e-12 * scale)
        assert any(abs(r.sigma - f * s) < 1e-12 * scale for f in SIMPLE_EIGENVALUES)


def test_table_needs_nonzero_s():
    with pytest.raises(STDataError):
        nine_case_table(0)


def test_case_b_equal_reduces_to_c():
    c = (0.4, -0.1, -0.3)
    Rb = build(STData.case_b(5.0, 1.5, 1.5, c))
    Rc = build(STData.case_c(5.0, 1.5, c, 0.0))
    assert np.abs(Rb - Rc).max() < 1e-14


def test_frame_equivariance():
    rng = np.random.default_rng(11)
    perms = signed_permutations()
    assert len(perms) == 192
    for _ in range(20):
        data = random_stdata(rng)
        R = build(data)
        wpd, wmd = data.weyl_diagonals()
        P = perms[rng.integers(len(perms))]
        _, _, wp, wm = recover(to_frame(R, P))
        scale = 1e-12 * (1 + abs(data.s) + np.abs(wpd).max())
        assert np.abs(wp - np.diag(np.diag(wp))).max() < scale
        assert np.abs(wm - np.diag(np.diag(wm))).max() < scale
        found = any(np.allclose(np.diag(wp), wpd[list(pi)], atol=scale)
                    and np.allclose(np.diag(wm), wmd[list(pi)], atol=scale)
                    for pi in __import__("itertools").permutations(range(3)))
        assert found


def test_csv_export():
    header, body = table_csv_rows(nine_case_table(24))
    assert header == ["case", "c2", "c3", "c4", "xi", "wp1", "wp2", "wp3", "wm1", "wm2", "wm3"]
    assert len(body) == 9 and body[0][0] == "i"
