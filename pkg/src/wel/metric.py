"""Coordinate charts and their curvature at a point."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from . import dsl
from .dsl import BinOp, Const, Pow, ScalarField
from .errors import ChartError, DomainError, NotPositiveDefiniteError, OutOfDomainError
from .tensor import check_positive_definite, kulkarni_nomizu, norm3_g, ricci_contract, weyl_from_riemann

DOMAIN_MARGIN = 1e-3


@dataclass(frozen=True)
class MetricChart:
    """A Riemannian metric on a coordinate box.

    ``components[i][j]`` is a :class:`ScalarField` over ``coords``; the grid is
    stored in full and is symmetric by construction.
    """

    coords: tuple
    components: tuple
    domain: tuple
    params: Mapping[str, float] = field(default_factory=dict)
    label: str = ""

    def __post_init__(self):
        n = len(self.coords)
        if not 1 <= n <= 4:
            raise ChartError(f"dimension must be 1..4, got {n}")
        if len(set(self.coords)) != n:
            raise ChartError(f"duplicate coordinate names {self.coords}")
        if len(self.components) != n or any(len(row) != n for row in self.components):
            raise ChartError("component grid has the wrong shape")
        if len(self.domain) != n:
            raise ChartError("domain needs one interval per coordinate")
        for lo, hi in self.domain:
            if not lo < hi:
                raise ChartError(f"empty domain interval ({lo}, {hi})")
        for i in range(n):
            for j in range(n):
                f = self.components[i][j]
                if tuple(f.coords) != tuple(self.coords):
                    raise ChartError("component bound to foreign coordinates")
                if j > i and f.source != self.components[j][i].source:
                    raise ChartError(f"components ({i},{j}) and ({j},{i}) disagree")

    # ----------------------------------------------------------------- builders

    @classmethod
    def from_expressions(cls, coords, components, domain, params=None, functions=None, label=""):
        """Build from strings / numbers / fields.  A missing or ``None`` lower
        entry is filled from the upper triangle (and vice versa)."""
        coords = tuple(coords)
        n = len(coords)
        params = dict(params or {})
        rows = [list(r) + [None] * (n - len(r)) for r in components]
        if len(rows) != n:
            raise ChartError(f"expected {n} component rows, got {len(rows)}")
        grid = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                a, b = rows[i][j], rows[j][i]
                src = a if a is not None else b
                if src is None:
                    src = 0.0
                fa = dsl.as_field(src, coords, params, functions)
                if a is not None and b is not None and i != j:
                    fb = dsl.as_field(b, coords, params, functions)
                    if fa.expr != fb.expr:
                        raise ChartError(f"components ({i},{j}) and ({j},{i}) disagree")
                grid[i][j] = fa
        for i in range(n):
            for j in range(i + 1, n):
                grid[j][i] = grid[i][j]
        return cls(coords, tuple(tuple(r) for r in grid), tuple((float(a), float(b)) for a, b in domain),
                   params, label)

    @classmethod
    def diagonal(cls, coords, diag, domain, params=None, functions=None, label=""):
        n = len(coords)
        comps = [[diag[i] if i == j else 0.0 for j in range(n)] for i in range(n)]
        return cls.from_expressions(coords, comps, domain, params, functions, label)

    # ----------------------------------------------------------------- basics

    @property
    def dim(self):
        return len(self.coords)

    def functions(self):
        out = {}
        for row in self.components:
            for f in row:
                out.update(f.functions())
        return out

    def check_point(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise OutOfDomainError(f"point must have {self.dim} coordinates")
        if not np.all(np.isfinite(x)):
            raise OutOfDomainError("point has non-finite coordinates")
        for xi, (lo, hi) in zip(x, self.domain):
            if not lo <= xi <= hi:
                raise OutOfDomainError(f"point {x.tolist()} outside domain {self.domain}")
        return x

    def metric_at(self, x, check=True):
        x = self.check_point(x) if check else np.asarray(x, float)
        n = self.dim
        g = np.empty((n, n))
        for i in range(n):
            for j in range(i, n):
                g[i, j] = g[j, i] = self.components[i][j].value(x)
        return g

    def metric_jet(self, x, jet="ad"):
        """(g, dg, ddg) with dg[a,b,c] = d_c g_ab and ddg[a,b,c,d] = d_c d_d g_ab."""
        x = self.check_point(x)
        n = self.dim
        g = np.empty((n, n))
        dg = np.empty((n, n, n))
        ddg = np.empty((n, n, n, n))
        for i in range(n):
            for j in range(i, n):
                f = self.components[i][j]
                if f.is_zero:
                    jt = dsl.Jet.constant(0.0, n)
                elif jet == "fd":
                    jt = f.fd_jet(x)
                else:
                    jt = f.jet(x)
                g[i, j] = g[j, i] = jt.val
                dg[i, j] = dg[j, i] = jt.grad
                ddg[i, j] = ddg[j, i] = jt.hess
        return g, dg, ddg

    def sample(self, count, rng, margin=DOMAIN_MARGIN):
        """Uniform in-domain points, away from the boundary, where g is positive definite."""
        lo = np.array([a for a, _ in self.domain])
        hi = np.array([b for _, b in self.domain])
        pad = np.minimum(margin, 0.1 * (hi - lo))
        lo, hi = lo + pad, hi - pad
        pts = []
        tries = 0
        while len(pts) < count:
            tries += 1
            if tries > 100 * count + 100:
                raise OutOfDomainError(f"could not sample {count} valid points from {self.label or 'chart'}")
            x = rng.uniform(lo, hi)
            try:
                check_positive_definite(self.metric_at(x))
            except (DomainError, NotPositiveDefiniteError, ZeroDivisionError, OverflowError, ValueError):
                continue
            pts.append(x)
        return np.array(pts)

    def grid(self, k, margin=DOMAIN_MARGIN):
        """Tensor grid with ``k`` points per axis (k**n points in total)."""
        axes = []
        for lo, hi in self.domain:
            pad = min(margin, 0.1 * (hi - lo))
            axes.append(np.linspace(lo + pad, hi - pad, k) if k > 1 else np.array([0.5 * (lo + hi)]))
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def permuted(self, order):
        """Same metric with coordinates listed in a new order (``order`` indexes old coords)."""
        coords = tuple(self.coords[k] for k in order)
        comps = [[self.components[a][b].on(coords) for b in order] for a in order]
        return MetricChart(coords, tuple(tuple(r) for r in comps), tuple(self.domain[k] for k in order),
                           self.params, self.label)

    def with_domain(self, domain):
        return MetricChart(self.coords, self.components, tuple(tuple(map(float, d)) for d in domain),
                           self.params, self.label)

    def to_json(self):
        n = self.dim
        return {
            "name": self.label,
            "dim": n,
            "coords": list(self.coords),
            "components": [[self.components[i][j].source if j >= i else None for j in range(n)] for i in range(n)],
            "domain": [list(d) for d in self.domain],
            "params": dict(self.params),
        }


# --------------------------------------------------------------------------- curvature


@dataclass
class CurvaturePack:
    """Curvature data at one point.  ``gamma[k, i, j]`` is the Christoffel symbol Gamma^k_ij."""

    point: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    gamma: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    einstein: np.ndarray
    scalar: float
    weyl: np.ndarray | None
    dg: np.ndarray | None = None

    @property
    def dim(self):
        return self.g.shape[0]


def christoffel(g_inv, dg):
    """Returns (Gamma of the first kind G1[k,i,j], Gamma^k_ij)."""
    g1 = 0.5 * (np.einsum("jki->kij", dg) + np.einsum("ikj->kij", dg) - np.einsum("ijk->kij", dg))
    return g1, np.einsum("kl,lij->kij", g_inv, g1)


def riemann_from_jet(g, dg, ddg):
    """(0,4) curvature tensor R[i,k,l,m] from the metric and its first two derivatives."""
    g_inv = np.linalg.inv(g)
    g1, gam = christoffel(g_inv, dg)
    # ddg[a,b,c,d] = d_c d_d g_ab
    lin = 0.5 * (
        np.einsum("imkl->iklm", ddg)
        + np.einsum("klim->iklm", ddg)
        - np.einsum("ilkm->iklm", ddg)
        - np.einsum("kmil->iklm", ddg)
    )
    quad = np.einsum("pkl,pim->iklm", g1, gam) - np.einsum("pkm,pil->iklm", g1, gam)
    return lin + quad, g_inv, gam


def pack_from_riemann(R, g, point=None, gamma=None, dg=None):
    """Assemble a CurvaturePack from an algebraic curvature tensor."""
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    g_inv = np.linalg.inv(g)
    ricci = ricci_contract(R, g_inv)
    ricci = 0.5 * (ricci + ricci.T)
    scalar = float(np.einsum("ij,ij->", g_inv, ricci))
    einstein = ricci - scalar / n * g
    weyl = weyl_from_riemann(R, g, ricci, scalar) if n == 4 else None
    return CurvaturePack(
        point=np.zeros(n) if point is None else np.asarray(point, float),
        g=g,
        g_inv=g_inv,
        gamma=np.zeros((n, n, n)) if gamma is None else gamma,
        riemann=R,
        ricci=ricci,
        einstein=einstein,
        scalar=scalar,
        weyl=weyl,
        dg=dg,
    )


def curvature_at(chart: MetricChart, x, jet="ad") -> CurvaturePack:
    g, dg, ddg = chart.metric_jet(x, jet)
    check_positive_definite(g)
    R, _, gam = riemann_from_jet(g, dg, ddg)
    return pack_from_riemann(R, g, np.asarray(x, float), gam, dg)


def _as_field(chart, f):
    return dsl.as_field(f, chart.coords, chart.params, chart.functions())


def hessian_of(chart, f, x, pack=None, jet="ad"):
    f = _as_field(chart, f)
    pack = pack or curvature_at(chart, x, jet)
    jt = f.fd_jet(np.asarray(x, float)) if jet == "fd" else f.jet(x)
    return jt.hess - np.einsum("kij,k->ij", pack.gamma, jt.grad)


def laplacian_of(chart, f, x, pack=None, jet="ad"):
    pack = pack or curvature_at(chart, x, jet)
    return float(np.einsum("ij,ij->", pack.g_inv, hessian_of(chart, f, x, pack, jet)))


def grad_sq(chart, f, x, pack=None):
    f = _as_field(chart, f)
    g_inv = pack.g_inv if pack is not None else np.linalg.inv(chart.metric_at(x))
    d = f.jet(x).grad
    return float(d @ g_inv @ d)


def fd_step(x):
    return dsl.EPS ** 0.25 * (1.0 + np.abs(x))


def ricci_derivative(chart, x, jet="ad"):
    """d_k r_ij by central differences of Ricci packs; returns (pack, dr[k,i,j])."""
    x = np.asarray(x, dtype=float)
    pack = curvature_at(chart, x, jet)
    n = chart.dim
    dr = np.empty((n, n, n))
    for k in range(n):
        h = fd_step(x[k])
        xp, xm = x.copy(), x.copy()
        xp[k] += h
        xm[k] -= h
        dr[k] = (curvature_at(chart, xp, jet).ricci - curvature_at(chart, xm, jet).ricci) / (2 * h)
    return pack, dr


def covariant_ricci_derivative(chart, x, jet="ad"):
    pack, dr = ricci_derivative(chart, x, jet)
    gam, r = pack.gamma, pack.ricci
    nab = dr - np.einsum("pki,pj->kij", gam, r) - np.einsum("pkj,ip->kij", gam, r)
    return pack, nab


def curvature_divergence_residual(chart, x, jet="ad"):
    """Codazzi residual |nabla_i r_jk - nabla_j r_ik|_g."""
    pack, nab = covariant_ricci_derivative(chart, x, jet)
    cod = nab - nab.transpose(1, 0, 2)
    return norm3_g(cod, pack.g_inv)


# --------------------------------------------------------------------------- assembly


def _zero(coords):
    return ScalarField.constant(0.0, coords)


def product_chart(a: MetricChart, b: MetricChart, label=None) -> MetricChart:
    clash = set(a.coords) & set(b.coords)
    if clash:
        raise ChartError(f"coordinate names collide: {sorted(clash)}")
    coords = tuple(a.coords) + tuple(b.coords)
    n, na = len(coords), a.dim
    if n > 4:
        raise ChartError("product dimension exceeds 4")
    grid = [[_zero(coords) for _ in range(n)] for _ in range(n)]
    for i in range(na):
        for j in range(na):
            grid[i][j] = a.components[i][j].on(coords)
    for i in range(b.dim):
        for j in range(b.dim):
            grid[na + i][na + j] = b.components[i][j].on(coords)
    params = {**a.params, **b.params}
    return MetricChart(coords, tuple(tuple(r) for r in grid), tuple(a.domain) + tuple(b.domain), params,
                       label or f"{a.label}x{b.label}")


def _probe_points(chart, count=32):
    rng = np.random.default_rng(12345)
    pts = list(chart.grid(2))
    lo = np.array([p for p, _ in chart.domain])
    hi = np.array([q for _, q in chart.domain])
    pad = np.minimum(DOMAIN_MARGIN, 0.1 * (hi - lo))
    pts.extend(rng.uniform(lo + pad, hi - pad, size=(count, chart.dim)))
    pts.append(0.5 * (lo + hi))
    return pts


def _check_sign(f: ScalarField, chart, name, strictly_positive):
    signs = set()
    for x in _probe_points(chart):
        try:
            v = f.value(x)
        except DomainError:
            continue
        if v == 0.0 or not np.isfinite(v):
            raise ChartError(f"{name} vanishes or is singular at {np.asarray(x).tolist()}")
        signs.add(v > 0)
    if strictly_positive and False in signs:
        raise ChartError(f"{name} must be positive on the domain")
    if len(signs) > 1:
        raise ChartError(f"{name} changes sign on the domain")


def _times(f: ScalarField, expr):
    if f.is_zero:
        return f
    return ScalarField(BinOp("*", f.expr, expr), f.coords)


def _over(f: ScalarField, expr):
    if f.is_zero:
        return f
    return ScalarField(BinOp("/", f.expr, expr), f.coords)


def conformal_scale(chart: MetricChart, phi, label=None, check=True) -> MetricChart:
    """The chart divided by phi**2."""
    phi = _as_field(chart, phi)
    if check:
        _check_sign(phi, chart, "phi", strictly_positive=False)
    sq = Pow(phi.expr, Fraction(2))
    grid = tuple(tuple(_over(f, sq) for f in row) for row in chart.components)
    return MetricChart(chart.coords, grid, chart.domain, chart.params, label or f"{chart.label}/phi^2")


def scale_chart(chart: MetricChart, k2: float, label=None) -> MetricChart:
    """Homothety g -> k2 * g."""
    grid = tuple(tuple(_times(f, Const(float(k2))) for f in row) for row in chart.components)
    return MetricChart(chart.coords, grid, chart.domain, chart.params, label or f"{k2}*{chart.label}")


def warped_chart(base: MetricChart, fibre: MetricChart, f, label=None, check=True) -> MetricChart:
    """base + f**2 fibre, with f a positive function on the base."""
    f = dsl.as_field(f, base.coords, base.params, base.functions())
    if check:
        _check_sign(f, base, "warping function", strictly_positive=True)
    prod = product_chart(base, fibre, label)
    coords = prod.coords
    sq = Pow(f.on(coords).expr, Fraction(2))
    nb = base.dim
    grid = [list(r) for r in prod.components]
    for i in range(nb, prod.dim):
        for j in range(nb, prod.dim):
            grid[i][j] = _times(grid[i][j], sq)
    return MetricChart(coords, tuple(tuple(r) for r in grid), prod.domain, prod.params,
                       label or f"{base.label}x_f{fibre.label}")


def pullback_residual(chart: MetricChart, fmap, jac, x):
    """max |F^*g - g| at x for a map with Jacobian ``jac`` (dF^a/dx^i)."""
    y = fmap(x)
    gy = chart.metric_at(y, check=False)
    J = jac(x)
    pulled = J.T @ gy @ J
    return float(np.abs(pulled - chart.metric_at(x, check=False)).max())


__all__ = [
    "MetricChart",
    "CurvaturePack",
    "christoffel",
    "riemann_from_jet",
    "pack_from_riemann",
    "curvature_at",
    "hessian_of",
    "laplacian_of",
    "grad_sq",
    "ricci_derivative",
    "covariant_ricci_derivative",
    "curvature_divergence_residual",
    "product_chart",
    "conformal_scale",
    "scale_chart",
    "warped_chart",
    "pullback_residual",
    "kulkarni_nomizu",
]
