"""Built-in charts addressable by label + params."""

from __future__ import annotations

import math

from .errors import ChartError, SpecError
from .metric import MetricChart, product_chart

POLE_MARGIN = 1e-2


def flat(n, coords=None, half_width=2.0, label=None):
    coords = coords or ("x", "y", "u", "v")[:n]
    return MetricChart.diagonal(coords, [1.0] * n, [(-half_width, half_width)] * n, label=label or f"flat{n}")


def sphere2(rho=1.0, coords=("theta", "phi"), label="sphere2"):
    """Round 2-sphere of radius rho in polar coordinates (K = 1/rho^2)."""
    if rho <= 0:
        raise ChartError("sphere radius must be positive")
    t, p = coords
    return MetricChart.diagonal(
        coords,
        ["rho^2", f"rho^2*sin({t})^2"],
        [(0.05, math.pi - 0.05), (-math.pi, math.pi)],
        params={"rho": float(rho)},
        label=label,
    )


def hyperbolic2(r=1.0, coords=("u", "w"), label="hyperbolic2"):
    """Upper half-plane r^2 (du^2 + dw^2)/w^2, curvature -1/r^2."""
    if r <= 0:
        raise ChartError("radius must be positive")
    u, w = coords
    comp = f"r^2/{w}^2"
    return MetricChart.diagonal(coords, [comp, comp], [(-2.0, 2.0), (0.5, 2.0)], params={"r": float(r)}, label=label)


def constant_curvature_surface(c, coords=("eta", "zeta"), label=None):
    """Geodesic polar chart d eta^2 + sn_c(eta)^2 d zeta^2 of curvature c."""
    eta, zeta = coords
    c = float(c)
    if c == 0.0:
        return MetricChart.diagonal(coords, [1.0, 1.0], [(-2.0, 2.0), (-2.0, 2.0)], label=label or "h0")
    k = math.sqrt(abs(c))
    if c > 0:
        comp = f"(sin({k!r}*{eta})/{k!r})^2"
        top = math.pi / k - POLE_MARGIN
        dom = (POLE_MARGIN, min(top, POLE_MARGIN + 2.0))
    else:
        comp = f"((exp({k!r}*{eta}) - exp(-{k!r}*{eta}))/(2*{k!r}))^2"
        dom = (POLE_MARGIN, 2.0)
    return MetricChart.diagonal(coords, [1.0, comp], [dom, (-math.pi, math.pi)], label=label or f"h({c})")


def s4(rho=1.0, label="s4"):
    """Round 4-sphere of radius rho via stereographic projection."""
    coords = ("x", "y", "u", "v")
    comp = "4*rho^2/(1 + x^2 + y^2 + u^2 + v^2)^2"
    return MetricChart.diagonal(coords, [comp] * 4, [(-2.0, 2.0)] * 4, params={"rho": float(rho)}, label=label)


def h4(r=1.0, label="h4"):
    """Upper half-space model of hyperbolic 4-space, curvature -1/r^2."""
    coords = ("x", "y", "u", "w")
    comp = "r^2/w^2"
    return MetricChart.diagonal(coords, [comp] * 4, [(-2.0, 2.0)] * 3 + [(0.5, 2.0)], params={"r": float(r)},
                                label=label)


def s2xs2(r1=1.0, r2=1.0, label="s2xs2"):
    # both factors would use the parameter name rho, so the radii are baked in
    dom = [(0.05, math.pi - 0.05), (-math.pi, math.pi)]
    a = MetricChart.diagonal(("t1", "p1"), [f"{r1!r}^2", f"{r1!r}^2*sin(t1)^2"], dom, label="s2a")
    b = MetricChart.diagonal(("t2", "p2"), [f"{r2!r}^2", f"{r2!r}^2*sin(t2)^2"], dom, label="s2b")
    return product_chart(a, b, label)


def s2xh2(r1=1.0, r2=1.0, label="s2xh2"):
    a = MetricChart.diagonal(("t1", "p1"), [f"{r1!r}^2", f"{r1!r}^2*sin(t1)^2"],
                             [(0.05, math.pi - 0.05), (-math.pi, math.pi)], label="s2")
    b = MetricChart.diagonal(("u", "w"), [f"{r2!r}^2/w^2"] * 2, [(-2.0, 2.0), (0.5, 2.0)], label="h2")
    return product_chart(a, b, label)


def eps_chart(a=1.0, label="eps"):
    """EPS space: 4a^2 g = d theta^2 + e^-theta d xi^2 + e^theta (d eta^2 + d zeta^2)."""
    if a == 0:
        raise ChartError("EPS parameter a must be nonzero")
    coords = ("theta", "xi", "eta", "zeta")
    k = "1/(4*a^2)"
    return MetricChart.diagonal(
        coords,
        [k, f"exp(-theta)*{k}", f"exp(theta)*{k}", f"exp(theta)*{k}"],
        [(-2.0, 2.0), (-3.0, 3.0), (-3.0, 3.0), (-3.0, 3.0)],
        params={"a": float(a)},
        label=label,
    )


BUILTINS = {
    "flat2": lambda **p: flat(2, label="flat2"),
    "flat3": lambda **p: flat(3, label="flat3"),
    "flat4": lambda **p: flat(4, label="flat4"),
    "sphere2": lambda rho=1.0: sphere2(rho),
    "hyperbolic2": lambda r=1.0: hyperbolic2(r),
    "s4": lambda rho=1.0: s4(rho),
    "h4": lambda r=1.0: h4(r),
    "s2xs2": lambda r1=1.0, r2=1.0: s2xs2(r1, r2),
    "s2xh2": lambda r1=1.0, r2=1.0: s2xh2(r1, r2),
    "eps": lambda a=1.0: eps_chart(a),
}

# four-dimensional Einstein members, used by harmonic-curvature checks
EINSTEIN_4D = ("flat4", "s4", "h4")


def builtin(label, params=None) -> MetricChart:
    if label not in BUILTINS:
        raise SpecError(f"unknown builtin {label!r}; choose from {sorted(BUILTINS)}")
    try:
        return BUILTINS[label](**dict(params or {}))
    except TypeError as exc:
        raise SpecError(f"bad params for builtin {label!r}: {exc}") from None
