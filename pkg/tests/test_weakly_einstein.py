import numpy as np
import pytest
from hypothesis import given, strategies as st

from wel import catalog
from wel.constructions import gk_family
from wel.errors import ToleranceError, WelError
from wel.metric import curvature_at, pack_from_riemann, scale_chart
from wel.singer_thorpe import STData, build, nine_case_table, row_stdata
from wel.weakly_einstein import CHB_CLASS, ORIENTATION_PAIRS, match_case, signature_at, we_residuals

from perturb import perturbed_catalog, perturbed_flat

REFLECT = np.diag([1.0, 1.0, 1.0, -1.0])


def reflected(R):
    return np.einsum("ai,bj,ck,dl,abcd->ijkl", REFLECT, REFLECT, REFLECT, REFLECT, R)


def st_signature(R):
    return signature_at(pack_from_riemann(R, np.eye(4)))


def test_s4_residuals(rng):
    chart = catalog.s4()
    for x in chart.sample(10, rng):
        assert max(we_residuals(curvature_at(chart, x))) < 1e-9


def test_s2xh2_scalar_flat(rng):
    chart = catalog.s2xh2(1.0, 1.0)
    for x in chart.sample(10, rng):
        assert max(we_residuals(curvature_at(chart, x))) < 1e-7


def test_perturbed_flat_not_we(rng):
    for _ in range(5):
        res = we_residuals(curvature_at(perturbed_flat(rng), np.array([0.1, 0.2, 0.3, 0.4])))
        assert min(res) > 1e-3


def test_wrong_dimension():
    with pytest.raises(WelError):
        we_residuals(curvature_at(catalog.sphere2(), np.array([1.0, 0.0])))


def test_eps_signature_and_match(rng):
    chart = catalog.eps_chart(1.0)
    for x in chart.sample(5, rng):
        sig = signature_at(curvature_at(chart, x))
        assert sig.scalar == pytest.approx(-4.0, abs=1e-12)
        np.testing.assert_allclose(sig.e_spec, [-2, 0, 0, 2], atol=1e-12)
        np.testing.assert_allclose(sig.wplus_spec, [-2 / 3, 1 / 3, 1 / 3], atol=1e-12)
        np.testing.assert_allclose(sig.wminus_spec, [-2 / 3, 1 / 3, 1 / 3], atol=1e-12)
        m = match_case(sig)
        assert m.case_label == "ari-b"
        p = m.parameters
        assert (p["lam"], p["mu"]) == pytest.approx((2.0, 0.0), abs=1e-12)
        assert max(abs(p["c2"]), abs(p["c3"]), abs(p["c4"])) < 1e-12
        assert p["sigma"] == pytest.approx(sig.scalar / 6)


def test_einstein_e_spec_zero(rng):
    chart = catalog.h4()
    sig = signature_at(curvature_at(chart, chart.sample(1, rng)[0]))
    assert np.abs(sig.e_spec).max() < 1e-12
    s22 = catalog.s2xs2()
    assert match_case(signature_at(curvature_at(s22, np.array([1.0, 0.2, 1.3, 0.1])))).case_label == "einstein"


def test_gk_ii_signature_shape():
    cm = gk_family("ii", 1.0, (1.0, 0.5, 0.3), (0.0, 0.5))
    x = np.array([0.25, 0.1, 0.5, 0.2])
    sig = signature_at(curvature_at(cm.chart, x))
    p, p1, _ = cm.trajectory.state_at(0.25)
    lam = abs(p1 * p1 - p * p)
    np.testing.assert_allclose(sig.e_spec, [-lam, -lam, lam, lam], atol=1e-9)


def test_not_we_raises(rng):
    with pytest.raises(ToleranceError):
        signature_at(curvature_at(perturbed_flat(rng), np.zeros(4)))
    sig = signature_at(curvature_at(perturbed_flat(rng), np.zeros(4)), force=True)
    assert sig.we_residual[0] > 1e-3


def test_chb_i_synthetic():
    R = build(STData.case_c(24.0, 1.0, (0.0, 0.0, 0.0), 3.0))
    m = match_case(st_signature(R))
    assert m.case_label == "chb-i" and m.match_residual < 1e-12


def test_zero_weyl_zero_e():
    R = 0.5 * np.einsum("ac,bd->abcd", np.eye(4), np.eye(4))
    R = R - R.transpose(0, 1, 3, 2)
    assert match_case(st_signature(R)).case_label == "conformally-flat"
    assert match_case(st_signature(np.zeros((4, 4, 4, 4)))).case_label == "flat-type"


@pytest.mark.parametrize("row", ["i", "ii", "iii", "iv", "v", "vi", "vii", "viii", "ix"])
def test_table_rows_match_and_flip(row):
    s = 24.0
    r = {t.label: t for t in nine_case_table(s)}[row]
    R = build(row_stdata(r, s, lam=1.5))
    m = match_case(st_signature(R))
    assert m.case_label == "chb-" + CHB_CLASS[row]
    mf = match_case(st_signature(reflected(R)))
    assert mf.case_label == m.flipped_label()
    assert mf.case_label == "chb-" + CHB_CLASS[ORIENTATION_PAIRS[row]]


def test_case_a_and_b_labels(rng):
    R = build(STData.case_a((-1.0, -0.3, 0.5, 0.8), (0.2, -0.5, 0.3)))
    assert match_case(st_signature(R)).case_label == "ari-a"
    R = build(STData.case_b(5.0, 1.2, 0.4, (0.3, -0.1, -0.2)))
    assert match_case(st_signature(R)).case_label == "ari-b"


def test_random_metric_is_none(rng):
    sig = signature_at(curvature_at(perturbed_flat(rng, amp=0.05), np.zeros(4)), force=True)
    assert match_case(sig).case_label == "none"


@given(st.floats(0.3, 4.0), st.integers(0, 10**6))
def test_homothety(k2, seed):
    chart = catalog.eps_chart(1.0)
    x = chart.sample(1, np.random.default_rng(seed))[0]
    a = signature_at(curvature_at(chart, x))
    b = signature_at(curvature_at(scale_chart(chart, k2), x))
    for u, v in ((a.scalar, b.scalar), (a.e_spec, b.e_spec), (a.wplus_spec, b.wplus_spec),
                 (a.wminus_spec, b.wminus_spec)):
        np.testing.assert_allclose(np.asarray(v) * k2, u, rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(a.ratios(), b.ratios(), atol=1e-9)


@given(st.integers(0, 10**6))
def test_signature_invariants(seed):
    rng = np.random.default_rng(seed)
    case = ["a", "b", "c"][seed % 3]
    from wel.singer_thorpe import random_stdata

    sig = st_signature(build(random_stdata(rng, case)))
    assert abs(sig.e_spec.sum()) < 1e-9 * (1 + abs(sig.scalar))
    wn = 1 + np.abs(sig.wplus_block).max() + np.abs(sig.wminus_block).max()
    assert abs(sig.wplus_spec.sum()) < 1e-9 * wn and abs(sig.wminus_spec.sum()) < 1e-9 * wn


def test_signature_ratios_stable_under_resampling(rng):
    chart = catalog.eps_chart(1.0)
    x = chart.sample(1, rng)[0]
    a = signature_at(curvature_at(chart, x)).ratios()
    b = signature_at(curvature_at(chart.permuted([1, 0, 3, 2]), x[[1, 0, 3, 2]])).ratios()
    np.testing.assert_allclose(a, b, atol=1e-12)


def residual_pairs(rng, n_random):
    pairs = []
    for label in ["flat4", "s4", "h4", "s2xs2", "s2xh2", "eps"]:
        chart = catalog.builtin(label)
        for x in chart.sample(5, rng):
            pairs.append((label, we_residuals(curvature_at(chart, x))))
    pairs.append(("s2xs2-unequal", we_residuals(curvature_at(catalog.s2xs2(1.0, 2.0), np.array([1.0, 0, 1, 0])))))
    labels = ["flat4", "s4", "h4", "s2xs2", "eps"]
    for k in range(n_random):
        chart = perturbed_catalog(rng, labels[k % len(labels)])
        x = chart.sample(1, rng, margin=0.1)[0]
        pairs.append((chart.label, we_residuals(curvature_at(chart, x))))
    return pairs


def test_residual_criteria_agree(rng):
    for label, (d, w) in residual_pairs(rng, 60):
        assert (d < 1e-7 and w < 1e-7) or (d > 1e-4 and w > 1e-4), (label, d, w)
