"""End-to-end assembly of the weakly Einstein families, with their predicted invariants."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import catalog
from .dsl import DomainError, ScalarField, UnivariateFunction
from .errors import ChartError, DegenerateFamilyError, ODEError, SpecError, WelError
from .metric import (
    MetricChart,
    conformal_scale,
    curvature_at,
    grad_sq,
    hessian_of,
    laplacian_of,
    product_chart,
    pullback_residual,
)
from .ode import (
    Event,
    chi_derivatives,
    classify_family,
    integrate_span,
    phq_third,
    solve_kappa,
    solve_phq,
)
from .tensor import norm_g, sym_eigen
from .weakly_einstein import we_residuals


# --------------------------------------------------------------------------- trajectory-backed functions


class TrajectoryFunction(UnivariateFunction):
    """Univariate function whose jet is read off an ODE solution.

    ``fn(t, state)`` returns (f, f', f''); derivatives come from the ODE
    right-hand side rather than from the interpolant.
    """

    def __init__(self, name, traj, fn):
        self.name = name
        self.traj = traj
        self._fn = fn

    def derivatives(self, t):
        try:
            state = self.traj.state_at(t)
        except ODEError as exc:
            raise DomainError(str(exc), self.name) from None
        return tuple(float(v) for v in self._fn(t, state))


class SampledFunction(UnivariateFunction):
    """Function known only through point evaluations; derivatives by central differences."""

    def __init__(self, name, fn, step=1e-4):
        self.name = name
        self._fn = fn
        self.step = step

    def derivatives(self, t):
        h = self.step * (1.0 + abs(t))
        f0, fp, fm = self._fn(t), self._fn(t + h), self._fn(t - h)
        return f0, (fp - fm) / (2 * h), (fp - 2 * f0 + fm) / (h * h)


def phq_functions(traj, variant, c):
    """(phi, chi) as functions of t backed by a solution of the third-order equation."""

    def phi_jet(t, s):
        return s[0], s[1], s[2]

    def chi_jet(t, s):
        p3 = phq_third(variant, c, *s)
        d1, d2 = chi_derivatives(variant, s[0], s[1], s[2], p3)
        return traj.quad_at("chi", t), d1, d2

    return TrajectoryFunction("phi", traj, phi_jet), TrajectoryFunction("chi", traj, chi_jet)


def kappa_function(traj):
    def jet(y, s):
        d = traj.rhs(y, s)
        return s[0], s[1], d[1]

    return TrajectoryFunction("kappa", traj, jet)


# --------------------------------------------------------------------------- containers


@dataclass
class Prediction:
    """Closed-form invariants of a construction as functions of the chart point."""

    scalar: Callable
    lam: Callable
    e_shape: str            # "(-l,0,0,l)" or "(-l,-l,l,l)"
    w_shape: str            # "(-s/12,-s/12,s/6)" or "(-s/12,s/24,s/24)"

    def e_spec(self, x):
        lam = abs(self.lam(x))
        if self.e_shape == "(-l,0,0,l)":
            return np.array([-lam, 0.0, 0.0, lam])
        return np.array([-lam, -lam, lam, lam])

    def w_spec(self, x):
        s = self.scalar(x)
        if self.w_shape == "(-s/12,-s/12,s/6)":
            vals = [-s / 12, -s / 12, s / 6]
        else:
            vals = [-s / 12, s / 24, s / 24]
        return np.sort(vals)

    def compare(self, sig):
        """Relative deviations of a signature from the predictions at its point."""
        x = sig.point
        s = self.scalar(x)
        scale = 1.0 + abs(s) + abs(self.lam(x))
        return {
            "scalar": float(abs(sig.scalar - s) / scale),
            "e_spec": float(np.abs(np.sort(sig.e_spec) - self.e_spec(x)).max() / scale),
            "wplus": float(np.abs(np.sort(sig.wplus_spec) - self.w_spec(x)).max() / scale),
            "wminus": float(np.abs(np.sort(sig.wminus_spec) - self.w_spec(x)).max() / scale),
        }


@dataclass
class ConstructedMetric:
    chart: MetricChart
    provenance: str
    predicted: Prediction | None = None
    trajectory: object = None
    classification: str = "proper"
    info: dict = field(default_factory=dict)


# --------------------------------------------------------------------------- EPS


def eps(a=1.0) -> ConstructedMetric:
    """EPS space; the Lie-bracket parameter of its group structure does not enter the metric."""
    if a == 0:
        raise ChartError("EPS parameter a must be nonzero")
    a2 = float(a) ** 2
    pred = Prediction(lambda x: -4.0 * a2, lambda x: 2.0 * a2, "(-l,0,0,l)", "(-s/12,-s/12,s/6)")
    cm = ConstructedMetric(catalog.eps_chart(a), "eps", pred, classification="proper")
    cm.info["ricci_spec"] = [-3.0 * a2, -a2, -a2, a2]
    return cm


def eps_warped(a=1.0, form="a") -> MetricChart:
    """EPS re-assembled as a warped product: form a (2+2) or form b (3+1)."""
    k = f"1/(4*{float(a)!r}^2)"
    dom = {"theta": (-2.0, 2.0), "xi": (-3.0, 3.0), "eta": (-3.0, 3.0), "zeta": (-3.0, 3.0)}
    from .metric import warped_chart

    if form == "a":
        base = MetricChart.diagonal(("theta", "xi"), [k, f"exp(-theta)*{k}"], [dom["theta"], dom["xi"]], label="base")
        fibre = MetricChart.diagonal(("eta", "zeta"), [k, k], [dom["eta"], dom["zeta"]], label="fibre")
        return warped_chart(base, fibre, "exp(theta/2)", label="eps-warped-a")
    base = MetricChart.diagonal(("theta", "eta", "zeta"), [k, f"exp(theta)*{k}", f"exp(theta)*{k}"],
                                [dom["theta"], dom["eta"], dom["zeta"]], label="base")
    fibre = MetricChart.diagonal(("xi",), [k], [dom["xi"]], label="fibre")
    return warped_chart(base, fibre, "exp(-theta/2)", label="eps-warped-b")


def eps_isometry(c, p, w, q):
    """The map (theta, xi, eta + i zeta) -> (theta + 2c, e^c xi + p, e^-c w (eta + i zeta) + q) and its Jacobian."""
    w = complex(w)
    q = complex(q)

    def fmap(x):
        th, xi, eta, zeta = x
        z = cmath.exp(-c) * w * complex(eta, zeta) + q
        return np.array([th + 2 * c, math.exp(c) * xi + p, z.real, z.imag])

    rot = math.exp(-c) * np.array([[w.real, -w.imag], [w.imag, w.real]])
    J = np.zeros((4, 4))
    J[0, 0] = 1.0
    J[1, 1] = math.exp(c)
    J[2:, 2:] = rot
    return fmap, (lambda x: J)


def eps_isometry_check(a, params, sample_points):
    """Largest pullback residual of the EPS metric under the map with params (c, p, w, q)."""
    c, p, w, q = params
    if abs(abs(complex(w)) - 1.0) > 1e-12:
        raise WelError("|w| must be 1")
    chart = catalog.eps_chart(a)
    fmap, jac = eps_isometry(c, p, w, q)
    return max(pullback_residual(chart, fmap, jac, np.asarray(x, float)) for x in sample_points)


# --------------------------------------------------------------------------- families with Killing fields


def _fibre(c):
    return catalog.constant_curvature_surface(c, ("eta", "zeta"), label=f"h({c})")


def gk_family(variant, c, init, t_span, tol=1e-10, y_span=(-1.0, 1.0), allow_degenerate=False,
              traj=None) -> ConstructedMetric:
    """(dt^2 + e^{2 chi} dy^2 + h_c)/phi^2 from a solution of the third-order equation."""
    c = float(c)
    if traj is None:
        traj = solve_phq(variant, c, init, t_span, tol)
    kind = classify_family(variant, traj, c, tol)
    if kind in ("einstein", "conformally_flat") and not allow_degenerate:
        raise DegenerateFamilyError(f"solution is {kind}; the metric is not proper")
    phi_f, chi_f = phq_functions(traj, variant, c)
    funcs = {"phi": phi_f, "chi": chi_f}
    t0, t1 = traj.span
    base = MetricChart.from_expressions(("t", "y"), [[1.0, 0.0], [0.0, "exp(2*chi(t))"]], [(t0, t1), y_span],
                                        functions=funcs, label="surface")
    prod = product_chart(base, _fibre(c))
    phi = ScalarField.parse("phi(t)", prod.coords, functions=funcs)
    chart = conformal_scale(prod, phi, label=f"gk_{variant}")

    def state(x):
        return traj.state_at(x[0])

    if variant == "i":
        def sbar(x):
            p, p1, _ = state(x)
            return 4.0 * (c * p * p - p1 * p1)

        def lam(x):
            p, p1, p2 = state(x)
            return 2.0 * abs(p * p2 - p1 * p1)

        pred = Prediction(sbar, lam, "(-l,0,0,l)", "(-s/12,-s/12,s/6)")
    else:
        def sbar(x):
            p, p1, p2 = state(x)
            return 8.0 * (p * p2 - p1 * p1)

        def lam(x):
            p, p1, _ = state(x)
            return abs(p1 * p1 - c * p * p)

        pred = Prediction(sbar, lam, "(-l,-l,l,l)", "(-s/12,s/24,s/24)")
    cm = ConstructedMetric(chart, f"gk_{variant}", pred, traj, kind)
    cm.info.update(variant=variant, c=c, init=[float(v) for v in init], functions=funcs)
    return cm


def gc_family(c, kappa_init, y_span=(0.1, 0.6), x_span=(-1.0, 1.0), y_init=0.0, tol=1e-10,
              margin=1e-6) -> ConstructedMetric:
    """(e^{2 kappa(y)}(dx^2 + dy^2) + h_c)/phi^2 with phi = e^-x sec y."""
    c = float(c)
    a, b = (float(v) for v in y_span)
    traj = solve_kappa(c, kappa_init, (min(a, y_init), max(b, y_init)), tol, y_init=y_init)
    if traj.stop_reason != "reached_end":
        raise ODEError(f"kappa integration stopped early ({traj.stop_reason})")
    if traj.info["log_type"]:
        raise DegenerateFamilyError("kappa' = tan y: the degenerate solution, metric is not proper")
    inside = (traj.grid >= a) & (traj.grid <= b)
    ys = traj.grid[inside]
    zeta = traj.states[inside, 1] - np.tan(ys)
    zeta_p = 1.0 / np.cos(ys) ** 2 - c * np.exp(2 * traj.states[inside, 0])
    for name, arr in (("kappa' - tan y", zeta), ("kappa'' - c exp(2 kappa)", zeta_p)):
        if np.min(np.abs(arr)) <= margin or (np.min(arr) < 0 < np.max(arr)):
            raise DegenerateFamilyError(f"{name} is not bounded away from zero on the span")
    kap = kappa_function(traj)
    funcs = {"kappa": kap}
    base = MetricChart.diagonal(("x", "y"), ["exp(2*kappa(y))"] * 2, [x_span, (a, b)], functions=funcs,
                                label="surface")
    prod = product_chart(base, _fibre(c))
    phi = ScalarField.parse("exp(-x)*sec(y)", prod.coords)
    chart = conformal_scale(prod, phi, label="gc")

    def sbar(x):
        xx, y = x[0], x[1]
        k = traj.state_at(y)[0]
        sec2 = 1.0 / math.cos(y) ** 2
        return 4.0 * (c - math.exp(-2 * k) * sec2) * math.exp(-2 * xx) * sec2

    def lam(x):
        xx, y = x[0], x[1]
        k, k1 = traj.state_at(y)
        return 2.0 * abs(k1 - math.tan(y)) * math.exp(-2 * xx - 2 * k) / math.cos(y) ** 3

    pred = Prediction(sbar, lam, "(-l,0,0,l)", "(-s/12,-s/12,s/6)")
    cm = ConstructedMetric(chart, "gc", pred, traj, "proper")
    cm.info.update(c=c, init=[float(v) for v in kappa_init], functions=funcs)
    return cm


def gc_zeta_scalar_residual(cm, points):
    """max relative gap between the chart's scalar curvature and -4 zeta' e^{-2 kappa} phi^2."""
    traj, c = cm.trajectory, cm.info["c"]
    out = 0.0
    for x in points:
        s = curvature_at(cm.chart, x).scalar
        k = traj.state_at(x[1])[0]
        zeta_p = 1.0 / math.cos(x[1]) ** 2 - c * math.exp(2 * k)
        phi = math.exp(-x[0]) / math.cos(x[1])
        out = max(out, abs(s + 4 * zeta_p * math.exp(-2 * k) * phi ** 2) / (1 + abs(s)))
    return out


# --------------------------------------------------------------------------- conformal 3+1 products


@dataclass
class ExaotReport:
    spectrum: float
    b_v: float
    scalar_eq: float
    einstein_v: float
    amt: float
    we_direct: float
    we_weyl: float
    points: int
    chart: MetricChart | None = None

    @property
    def conditions(self):
        return max(self.spectrum, self.b_v, self.scalar_eq, self.einstein_v)

    def to_json(self):
        return {k: float(getattr(self, k)) for k in
                ("spectrum", "b_v", "scalar_eq", "einstein_v", "amt", "we_direct", "we_weyl")} | {
            "points": self.points}


def exaot_conditions(g3, phi, v, theta, x):
    """Residuals of the four conditions and of the single-tensor form at one point of g3."""
    x = np.asarray(x, float)
    pack = curvature_at(g3, x)
    g = pack.g
    hess = hessian_of(g3, phi, x, pack)
    lap = float(np.einsum("ij,ij->", pack.g_inv, hess))
    ph = phi.value(x)
    b = 2.0 * hess + ph * pack.ricci
    vv = np.array([vi.value(x) for vi in v])
    th = theta.value(x)
    v2 = float(vv @ g @ vv)
    omega = g @ vv
    scale = 1.0 + np.abs(b).max() + v2
    spec = sym_eigen(b, g)[0]
    spectrum = float(np.abs(spec - np.array([-v2, -v2, 0.0])).max()) / scale
    b_v = float(np.sqrt(max(omega_norm(b @ vv, pack.g_inv), 0.0))) / scale
    gsq = grad_sq(g3, phi, x, pack)
    lhs = ((pack.scalar - 6 * th) * ph + 6 * lap) * ph
    scalar_eq = abs(lhs - 12 * gsq) / (1.0 + abs(lhs) + 12 * abs(gsq))
    ev = pack.einstein @ vv - th * omega
    einstein_v = float(np.sqrt(max(omega_norm(ev, pack.g_inv), 0.0))) / (1.0 + np.abs(pack.einstein).max() * (1 + np.sqrt(v2)))
    amt_t = b - (lap + pack.scalar * ph / 2.0) * g - np.outer(omega, omega)
    amt = norm_g(amt_t, pack.g_inv) / scale
    return spectrum, b_v, scalar_eq, einstein_v, amt


def omega_norm(w, g_inv):
    return float(w @ g_inv @ w)


def exaot_chart(g3: MetricChart, phi: ScalarField, line_coord="s", line_span=(-1.0, 1.0)):
    """(g3 + d line^2)/phi^2."""
    if g3.dim != 3:
        raise ChartError("exaot needs a three-dimensional chart")
    line = MetricChart.diagonal((line_coord,), [1.0], [line_span], label="line")
    prod = product_chart(g3, line)
    return conformal_scale(prod, phi.on(prod.coords), label="exaot")


def exaot_verify(g3: MetricChart, phi, v, theta, sample_points, line_coord="s") -> ExaotReport:
    if g3.dim != 3:
        raise ChartError("exaot needs a three-dimensional chart")
    if len(v) != 3:
        raise ChartError("v needs three components")
    fns = g3.functions()
    phi = _field(phi, g3, fns)
    theta = _field(theta, g3, fns)
    v = [_field(vi, g3, fns) for vi in v]
    worst = np.zeros(5)
    for x in sample_points:
        if phi.value(x) == 0:
            raise ChartError("phi vanishes at a sample point")
        worst = np.maximum(worst, exaot_conditions(g3, phi, v, theta, x))
    chart = exaot_chart(g3, phi, line_coord)
    wd = ww = 0.0
    for x in sample_points:
        pack = curvature_at(chart, np.append(np.asarray(x, float), 0.0))
        d, w = we_residuals(pack)
        wd, ww = max(wd, d), max(ww, w)
    return ExaotReport(*worst, wd, ww, len(sample_points), chart)


def _field(f, chart, fns):
    if isinstance(f, ScalarField):
        return f.on(chart.coords)
    if isinstance(f, (int, float)):
        return ScalarField.constant(f, chart.coords)
    return ScalarField.parse(f, chart.coords, chart.params, fns)


def gk_resplit(cm: ConstructedMetric, v_scale=1.0):
    """3+1 data (g3, phi3, v, theta) of a gk metric.

    The metric (dt^2 + e^{2 chi} dy^2 + h)/phi^2 is also
    (e^{-2 chi}(dt^2 + h) + dy^2)/(phi e^{-chi})^2, with y as the line factor.
    ``v`` points along d/dt with |v|^2 = -tr b / 2 and theta = e(v, v)/|v|^2,
    both read off direct curvature computations on g3.
    """
    if not cm.provenance.startswith("gk_"):
        raise WelError("re-split needs a gk construction")
    funcs = dict(cm.info["functions"])
    c = cm.info["c"]
    fib = _fibre(c)
    t0, t1 = cm.chart.domain[0]
    coords = ("t", "eta", "zeta")
    comps = [["exp(-2*chi(t))", 0, 0], [None, "exp(-2*chi(t))", 0],
             [None, None, f"exp(-2*chi(t))*({fib.components[1][1].source})"]]
    g3 = MetricChart.from_expressions(coords, comps, [(t0, t1), *fib.domain], functions=funcs, label="g3")
    phi3 = ScalarField.parse("phi(t)*exp(-chi(t))", coords, functions=funcs)
    eta0 = 0.5 * sum(fib.domain[0])
    zeta0 = 0.5 * sum(fib.domain[1])

    def probe(t):
        x = np.array([t, eta0, zeta0])
        pack = curvature_at(g3, x)
        hess = hessian_of(g3, phi3, x, pack)
        b = 2.0 * hess + phi3.value(x) * pack.ricci
        trb = float(np.einsum("ij,ij->", pack.g_inv, b))
        return pack, max(-0.5 * trb, 0.0)

    def v_t(t):
        pack, v2 = probe(t)
        return v_scale * math.sqrt(v2 / pack.g[0, 0])

    def theta_t(t):
        pack, _ = probe(t)
        return pack.einstein[0, 0] / pack.g[0, 0]

    vfun = SampledFunction("vt", v_t)
    thfun = SampledFunction("theta", theta_t)
    fx = {"vt": vfun, "theta": thfun}
    v = [ScalarField.parse("vt(t)", coords, functions=fx), ScalarField.constant(0.0, coords),
         ScalarField.constant(0.0, coords)]
    theta = ScalarField.parse("theta(t)", coords, functions=fx)
    return g3, phi3, v, theta


# --------------------------------------------------------------------------- harmonic-curvature probe


def _gauss_curvature(chart, x):
    return 0.5 * curvature_at(chart, x).scalar


def kpc_gamma(g2: MetricChart, c, x):
    """gamma = (K+c)^3 + 3(K+c) Lap K - 6 |grad K|^2, K and its derivatives by differencing packs."""
    x = np.asarray(x, float)
    pack = curvature_at(g2, x)
    K = 0.5 * pack.scalar
    n = 2
    h = np.finfo(float).eps ** 0.25 * (1.0 + np.abs(x))
    grad = np.empty(n)
    hess = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h[i]
        kp, km = _gauss_curvature(g2, x + e), _gauss_curvature(g2, x - e)
        grad[i] = (kp - km) / (2 * h[i])
        hess[i, i] = (kp - 2 * K + km) / h[i] ** 2
    ej = np.zeros(n)
    ei = np.zeros(n)
    ei[0], ej[1] = h[0], h[1]
    hess[0, 1] = hess[1, 0] = (_gauss_curvature(g2, x + ei + ej) - _gauss_curvature(g2, x + ei - ej)
                               - _gauss_curvature(g2, x - ei + ej) + _gauss_curvature(g2, x - ei - ej)) / (
        4 * h[0] * h[1])
    cov = hess - np.einsum("kij,k->ij", pack.gamma, grad)
    lap = float(np.einsum("ij,ij->", pack.g_inv, cov))
    gsq = float(grad @ pack.g_inv @ grad)
    kc = K + c
    return kc ** 3 + 3 * kc * lap - 6 * gsq, kc


def kpc_probe(g2: MetricChart, c, sample_points):
    """(gamma values, spread max - min) over the sample points."""
    if g2.dim != 2:
        raise ChartError("kpc needs a surface chart")
    gammas, signs = [], set()
    for x in sample_points:
        gam, kc = kpc_gamma(g2, c, x)
        if kc == 0:
            raise WelError("K + c vanishes at a sample point")
        signs.add(kc > 0)
        gammas.append(gam)
    if len(signs) > 1:
        raise WelError("K + c changes sign on the samples")
    gammas = np.array(gammas)
    return gammas, float(gammas.max() - gammas.min())


def kpc_rhs(c, gamma):
    """State (chi, chi', K, K') for a warped surface dt^2 + e^{2 chi} dy^2 with constant gamma."""

    def rhs(t, s):
        chi, d, K, dK = s
        kc = K + c
        ddK = (gamma - kc ** 3 + 6 * dK * dK) / (3 * kc) - d * dK
        return np.array([d, -K - d * d, dK, ddK])

    return rhs


def kpc_instance(c=1.0, gamma=2.0, init=(0.0, 0.2, 0.5, 0.3), t_span=(0.0, 0.6), tol=1e-10,
                 y_span=(-1.0, 1.0)) -> ConstructedMetric:
    """A non-constant-curvature surface with constant gamma, and the 4-metric (K+c)^-2 (g + h_c)."""
    rhs = kpc_rhs(float(c), float(gamma))
    events = [Event("K+c", lambda t, s: s[2] + c)]
    traj = integrate_span(rhs, t_span[0], list(init), t_span, tol, events, labels=("chi", "dchi", "K", "dK"))
    if traj.stop_reason != "reached_end":
        raise ODEError(f"integration stopped early ({traj.stop_reason})")

    def chi_jet(t, s):
        return s[0], s[1], -s[2] - s[1] ** 2

    def k_jet(t, s):
        return s[2], s[3], rhs(t, s)[3]

    funcs = {"chi": TrajectoryFunction("chi", traj, chi_jet), "kk": TrajectoryFunction("kk", traj, k_jet)}
    g2 = MetricChart.from_expressions(("t", "y"), [[1.0, 0.0], [0.0, "exp(2*chi(t))"]], [traj.span, y_span],
                                      functions=funcs, label="kpc-surface")
    prod = product_chart(g2, _fibre(c))
    factor = ScalarField.parse(f"kk(t) + {float(c)!r}", prod.coords, functions=funcs)
    chart = conformal_scale(prod, factor, label="kpc")
    cm = ConstructedMetric(chart, "kpc", None, traj, "harmonic")
    cm.info.update(c=float(c), gamma=float(gamma), surface=g2, functions=funcs)
    return cm


def goe_surface(cm: ConstructedMetric) -> MetricChart:
    """The surface factor dt^2 + e^{2 chi} dy^2 of a gk construction."""
    funcs = cm.info["functions"]
    return MetricChart.from_expressions(("t", "y"), [[1.0, 0.0], [0.0, "exp(2*chi(t))"]],
                                        [cm.chart.domain[0], cm.chart.domain[1]], functions=funcs, label="goe")


def laplacian_check(chart, f, x):
    """Convenience: (covariant Hessian, Laplacian) of f at x."""
    return hessian_of(chart, f, x), laplacian_of(chart, f, x)


def sample_chart(cm: ConstructedMetric, count, rng):
    return cm.chart.sample(count, rng, margin=1e-2)


FAMILIES = ("eps", "gk_i", "gk_ii", "gc", "exaot", "kpc")


def exaot_from_gk(c=0.0, init=(1.0, 0.5, 0.3), t_span=(0.0, 0.5), tol=1e-10, v_scale=1.0, points=5, seed=0):
    """3+1 re-split of a gk_ii metric, verified against the exaot conditions and re-assembled."""
    gk = gk_family("ii", c, init, t_span, tol)
    g3, phi3, v, theta = gk_resplit(gk, v_scale)
    pts = g3.sample(points, np.random.default_rng(seed), margin=0.05)
    report = exaot_verify(g3, phi3, v, theta, pts, line_coord="y")
    cm = ConstructedMetric(report.chart, "exaot", None, gk.trajectory, gk.classification)
    cm.info.update(c=float(c), init=[float(x) for x in init], exaot=report.to_json(), functions=gk.info["functions"])
    return cm


def _pair(v, name):
    v = tuple(float(x) for x in v)
    if len(v) != 2:
        raise SpecError(f"{name} needs two numbers")
    return v


FAMILY_PARAMS = {
    "eps": {"a"},
    "gk_i": {"c", "init", "t_span", "tol", "y_span", "allow_degenerate"},
    "gk_ii": {"c", "init", "t_span", "tol", "y_span", "allow_degenerate"},
    "gc": {"c", "init", "y_span", "x_span", "y_init", "tol"},
    "exaot": {"c", "init", "t_span", "tol", "v_scale"},
    "kpc": {"c", "gamma", "init", "t_span", "tol"},
}


def build_family(name, params=None) -> ConstructedMetric:
    """Construction addressed by label ("eps", "gk-i", "gk-ii", "gc", "exaot", "kpc") and a parameter dict."""
    p = dict(params or {})
    key = name.replace("-", "_")
    if key not in FAMILY_PARAMS:
        raise SpecError(f"unknown family {name!r}; choose from eps, gk-i, gk-ii, gc, exaot, kpc")
    extra = set(p) - FAMILY_PARAMS[key]
    if extra:
        raise SpecError(f"unknown parameters for {name}: {sorted(extra)}")
    try:
        if key == "eps":
            return eps(p.get("a", 1.0))
        if key in ("gk_i", "gk_ii"):
            return gk_family(key[3:], p.get("c", 0.0), p["init"], _pair(p.get("t_span", (0.0, 0.5)), "t_span"),
                             p.get("tol", 1e-10), _pair(p.get("y_span", (-1.0, 1.0)), "y_span"),
                             allow_degenerate=p.get("allow_degenerate", True))
        if key == "gc":
            return gc_family(p.get("c", 1.0), p["init"], _pair(p.get("y_span", (0.1, 0.6)), "y_span"),
                             _pair(p.get("x_span", (-1.0, 1.0)), "x_span"), p.get("y_init", 0.0),
                             p.get("tol", 1e-10))
        if key == "exaot":
            return exaot_from_gk(p.get("c", 0.0), p.get("init", (1.0, 0.5, 0.3)),
                                 _pair(p.get("t_span", (0.0, 0.5)), "t_span"), p.get("tol", 1e-10),
                                 p.get("v_scale", 1.0))
        return kpc_instance(p.get("c", 1.0), p.get("gamma", 2.0), p.get("init", (0.0, 0.2, 0.5, 0.3)),
                            _pair(p.get("t_span", (0.0, 0.6)), "t_span"), p.get("tol", 1e-10))
    except KeyError as exc:
        raise SpecError(f"family {name!r} needs parameter {exc.args[0]!r}") from None
