"""Residuals of the conformal-change and product identities, used as cross-checks of the curvature engine."""

from __future__ import annotations

import numpy as np

from . import dsl
from .metric import MetricChart, conformal_scale, curvature_at, fd_step, hessian_of, laplacian_of, product_chart


def _rel(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.abs(a - b).max() / (1.0 + np.abs(b).max()))


def conformal_laws(gbar: MetricChart, phi, x, f=None):
    """Compare curvature of g = gbar/phi^2 computed directly with the transformation laws.

    Returns relative residuals for the scalar law, the Einstein law, the Ricci law,
    and (with a test function ``f``) the Hessian, Laplacian and gradient laws.
    """
    fns = gbar.functions()
    phi = dsl.as_field(phi, gbar.coords, gbar.params, fns)
    g = conformal_scale(gbar, phi)
    x = np.asarray(x, float)
    n = gbar.dim
    pb, p = curvature_at(gbar, x), curvature_at(g, x)
    ph = phi.value(x)
    dphi = phi.jet(x).grad
    H = hessian_of(gbar, phi, x, pb)
    lap = float(np.einsum("ij,ij->", pb.g_inv, H))
    q = float(dphi @ pb.g_inv @ dphi)
    out = {}
    out["scalar"] = _rel(p.scalar, ph * ph * pb.scalar + 2 * (n - 1) * ph * lap - n * (n - 1) * q)
    out["einstein"] = _rel(p.einstein, pb.einstein + (n - 2) / ph * (H - lap / n * pb.g))
    out["ricci"] = _rel(p.ricci, pb.ricci + (n - 2) / ph * H + (lap / ph - (n - 1) * q / ph ** 2) * pb.g)
    if f is not None:
        f = dsl.as_field(f, gbar.coords, gbar.params, fns)
        df = f.jet(x).grad
        cross = float(dphi @ pb.g_inv @ df)
        Hf_bar = hessian_of(gbar, f, x, pb)
        Hf = hessian_of(g, f, x, p)
        out["hessian"] = _rel(Hf, Hf_bar + (np.outer(dphi, df) + np.outer(df, dphi) - cross * pb.g) / ph)
        lap_bar = float(np.einsum("ij,ij->", pb.g_inv, Hf_bar))
        lap_g = float(np.einsum("ij,ij->", p.g_inv, Hf))
        out["laplacian"] = _rel(lap_g, ph * ph * lap_bar - (n - 2) * ph * cross)
        out["gradient"] = _rel(df @ p.g_inv @ df, ph * ph * (df @ pb.g_inv @ df))
    return out


def product_laws(a: MetricChart, b: MetricChart, alpha_a, alpha_b, x):
    """Split of s and e for (a + b)/phi^2 with phi = alpha_a + alpha_b (separated variables).

    Residuals of the scalar formula, the two block formulas for e, the
    equal-dimension form of the trace terms, and e-orthogonality of the factors.
    """
    fa = dsl.as_field(alpha_a, a.coords, a.params, a.functions())
    fb = dsl.as_field(alpha_b, b.coords, b.params, b.functions())
    prod = product_chart(a, b)
    phi = dsl.as_field(f"({fa.source}) + ({fb.source})", prod.coords, {**a.params, **b.params},
                       prod.functions())
    g = conformal_scale(prod, phi)
    x = np.asarray(x, float)
    pdim, qdim = a.dim, b.dim
    n = pdim + qdim
    xa, xb = x[:pdim], x[pdim:]
    pa, pb_, pk = curvature_at(a, xa), curvature_at(b, xb), curvature_at(g, x)
    ph = phi.value(x)
    Ha, Hb = hessian_of(a, fa, xa, pa), hessian_of(b, fb, xb, pb_)
    Ya, Yb = float(np.einsum("ij,ij->", pa.g_inv, Ha)), float(np.einsum("ij,ij->", pb_.g_inv, Hb))
    da, db = fa.jet(xa).grad, fb.jet(xb).grad
    Qa, Qb = float(da @ pa.g_inv @ da), float(db @ pb_.g_inv @ db)
    sa, sb = pa.scalar, pb_.scalar
    trace = (n - 2) / ph * (Ya + Yb)
    xi_a = sa / pdim - (sa + sb + trace) / n
    xi_b = sb / qdim - (sa + sb + trace) / n
    e = pk.einstein
    out = {
        "scalar": _rel(pk.scalar, ph * ph * (sa + sb) + 2 * (n - 1) * ph * (Ya + Yb) - n * (n - 1) * (Qa + Qb)),
        "block_a": _rel(e[:pdim, :pdim], pa.einstein + (n - 2) / ph * Ha + xi_a * pa.g),
        "block_b": _rel(e[pdim:, pdim:], pb_.einstein + (n - 2) / ph * Hb + xi_b * pb_.g),
        "orthogonality": float(np.abs(e[:pdim, pdim:]).max() / (1.0 + np.abs(e).max())),
    }
    if pdim == qdim:
        out["equal_dims"] = max(_rel(n * xi_a, sa - sb - trace), _rel(n * xi_b, sb - sa - trace))
    return out


def bochner_residual(chart: MetricChart, alpha, x):
    """div(nabla v) - r(., v) - d div v for v = grad alpha, with the divergence by central differences."""
    f = dsl.as_field(alpha, chart.coords, chart.params, chart.functions())
    x = np.asarray(x, float)
    n = chart.dim
    pack = curvature_at(chart, x)

    def mixed(y):
        pk = curvature_at(chart, y)
        return pk.g_inv @ hessian_of(chart, f, y, pk)     # H^k_i

    dH = np.empty((n, n, n))       # dH[m, k, i] = d_m H^k_i
    dlap = np.empty(n)
    for m in range(n):
        h = fd_step(x[m])
        xp, xm = x.copy(), x.copy()
        xp[m] += h
        xm[m] -= h
        dH[m] = (mixed(xp) - mixed(xm)) / (2 * h)
        dlap[m] = (laplacian_of(chart, f, xp) - laplacian_of(chart, f, xm)) / (2 * h)
    H = mixed(x)
    gam = pack.gamma
    div = (np.einsum("kki->i", dH) + np.einsum("kkl,li->i", gam, H) - np.einsum("lki,kl->i", gam, H))
    v = pack.g_inv @ f.jet(x).grad
    rhs = pack.ricci @ v + dlap
    w = div - rhs
    return float(np.sqrt(max(w @ pack.g_inv @ w, 0.0)) / (1.0 + np.abs(rhs).max()))
