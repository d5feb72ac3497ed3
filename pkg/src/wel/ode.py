"""Adaptive Dormand-Prince 5(4) integration with defect-controlled dense output.

A step is accepted when both the embedded local error estimate and the
defect ``|H'(t) - f(t, H(t))|`` of the cubic Hermite interpolant at two
interior sample points are within tolerance.  Controlling the defect makes
the dense output itself a near-solution, which is what the metric charts
consume.  ``Trajectory.state_at`` additionally re-runs a single
Dormand-Prince step from the nearest node for point values at full
accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ODEError

# Dormand-Prince tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

# defect sample points inside a step (Gauss-Legendre nodes on [0, 1])
_DEFECT_TAU = (0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6)

SAFETY = 0.9
MAX_STEPS = 200_000


def dp_step(rhs, t, y, f0, h):
    """One Dormand-Prince step; returns (y5, f(t+h, y5), error vector)."""
    k = [f0]
    for i in range(1, 7):
        yi = y + h * sum(a * kj for a, kj in zip(_A[i], k))
        k.append(np.asarray(rhs(t + _C[i] * h, yi), dtype=float))
    y5 = y + h * sum(b * kj for b, kj in zip(_B5, k) if b != 0.0)
    err = h * sum(e * kj for e, kj in zip(_E, k) if e != 0.0)
    return y5, k[6], err


def hermite(t0, t1, y0, y1, f0, f1, t):
    """Cubic Hermite value and derivative on [t0, t1] (scalar t)."""
    h = t1 - t0
    s = (t - t0) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    val = h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1
    d00 = 6 * s * s - 6 * s
    d10 = 3 * s * s - 4 * s + 1
    d01 = -d00
    d11 = 3 * s * s - 2 * s
    der = (d00 * y0 + d01 * y1) / h + d10 * f0 + d11 * f1
    return val, der


@dataclass
class Event:
    """Terminal event: integration stops before ``fn(t, y)`` changes sign."""

    name: str
    fn: Callable[[float, np.ndarray], float]


@dataclass
class Trajectory:
    """Nodes, states, node derivatives and the right-hand side that produced them."""

    grid: np.ndarray
    states: np.ndarray
    derivs: np.ndarray
    stop_reason: str = "reached_end"
    rhs: Callable | None = None
    tol: float = 0.0
    event: str | None = None
    labels: tuple = ()
    info: dict = field(default_factory=dict)
    quadratures: dict = field(default_factory=dict)

    @classmethod
    def from_arrays(cls, grid, states, derivs=None, labels=(), rhs=None):
        """Synthetic trajectory (node derivatives by finite differences if not given)."""
        grid = np.asarray(grid, dtype=float)
        states = np.asarray(states, dtype=float)
        if states.ndim == 1:
            states = states[:, None]
        if derivs is None:
            derivs = np.gradient(states, grid, axis=0, edge_order=2)
        if np.any(np.diff(grid) <= 0):
            raise ODEError("grid must be strictly increasing")
        return cls(grid, states, np.asarray(derivs, float), "reached_end", rhs, 0.0, None, tuple(labels))

    @property
    def span(self):
        return float(self.grid[0]), float(self.grid[-1])

    def __len__(self):
        return len(self.grid)

    def _index(self, t):
        if not self.grid[0] - 1e-12 * (1 + abs(self.grid[0])) <= t <= self.grid[-1] + 1e-12 * (1 + abs(self.grid[-1])):
            raise ODEError(f"t={t!r} outside trajectory span {self.span}")
        i = int(np.searchsorted(self.grid, t, side="right")) - 1
        return min(max(i, 0), len(self.grid) - 2)

    def dense(self, t):
        """Hermite interpolant value and derivative at scalar t."""
        if len(self.grid) == 1:
            return self.states[0].copy(), self.derivs[0].copy()
        i = self._index(t)
        return hermite(self.grid[i], self.grid[i + 1], self.states[i], self.states[i + 1],
                       self.derivs[i], self.derivs[i + 1], t)

    def __call__(self, t):
        return self.dense(t)[0]

    def state_at(self, t):
        """State at t, from one Dormand-Prince step off the nearest node (Hermite if no rhs)."""
        if self.rhs is None:
            return self.dense(t)[0]
        i = self._index(t)
        t0, t1 = self.grid[i], self.grid[i + 1]
        j = i if abs(t - t0) <= abs(t1 - t) else i + 1
        h = t - self.grid[j]
        if h == 0.0:
            return self.states[j].copy()
        return dp_step(self.rhs, self.grid[j], self.states[j], self.derivs[j], h)[0]

    def add_quadrature(self, name, integrand, t_ref, order=8):
        """Attach q(t) = int_{t_ref}^t integrand(s, state(s)) ds, integrated step by step.

        Node values use composite Gauss-Legendre on each step over
        :meth:`state_at`; off-node values integrate from the nearest node.
        """
        x, w = np.polynomial.legendre.leggauss(order)
        j0 = int(np.argmin(np.abs(self.grid - t_ref)))
        if abs(self.grid[j0] - t_ref) > 1e-12 * (1 + abs(t_ref)):
            raise ODEError("quadrature reference point must be a node")
        vals = np.zeros(len(self.grid))
        rule = (x, w)
        pieces = [self._gauss(integrand, self.grid[i], self.grid[i + 1], rule) for i in range(len(self.grid) - 1)]
        for i in range(j0, len(self.grid) - 1):
            vals[i + 1] = vals[i] + pieces[i]
        for i in range(j0 - 1, -1, -1):
            vals[i] = vals[i + 1] - pieces[i]
        self.quadratures[name] = (vals, integrand, rule)

    def _gauss(self, integrand, a, b, rule):
        x, w = rule
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        total = 0.0
        for xi, wi in zip(x, w):
            t = mid + half * xi
            total += wi * integrand(t, self.state_at(t))
        return half * total

    def quad_at(self, name, t):
        vals, integrand, rule = self.quadratures[name]
        i = self._index(t)
        j = i if abs(t - self.grid[i]) <= abs(self.grid[i + 1] - t) else i + 1
        if t == self.grid[j]:
            return float(vals[j])
        return float(vals[j] + self._gauss(integrand, self.grid[j], t, rule))

    def derivative_at(self, t):
        y = self.state_at(t)
        if self.rhs is None:
            return self.dense(t)[1]
        return np.asarray(self.rhs(t, y), dtype=float)

    def defect(self, ts):
        """Scaled defect max_k |H'_k - f_k(H)| / (1 + |H_k|) of the dense output."""
        if self.rhs is None:
            raise ODEError("defect needs the right-hand side")
        out = np.empty(len(ts))
        for n, t in enumerate(ts):
            y, dy = self.dense(t)
            out[n] = np.max(np.abs(dy - self.rhs(t, y)) / (1.0 + np.abs(y)))
        return out

    def off_node_points(self, count=1000, rng=None):
        """``count`` points strictly inside steps, spread over the whole span."""
        rng = rng or np.random.default_rng(0)
        steps = rng.integers(0, len(self.grid) - 1, size=count)
        frac = rng.uniform(0.05, 0.95, size=count)
        return np.sort(self.grid[steps] + frac * np.diff(self.grid)[steps])


def _scaled_error(err, y0, y1, tol):
    sc = tol + tol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.max(np.abs(err) / sc))


def integrate(rhs, t0, y0, t1, tol=1e-8, events: Sequence[Event] = (), labels=(), max_steps=MAX_STEPS):
    """Integrate y' = rhs(t, y) from t0 to t1 (either direction).

    Returns a Trajectory whose grid runs in the integration direction; use
    :func:`integrate_span` for an increasing grid around an interior start.
    """
    if not tol > 0:
        raise ODEError("tol must be positive")
    y = np.asarray(y0, dtype=float).copy()
    span = t1 - t0
    if span == 0:
        raise ODEError("empty integration span")
    direction = 1.0 if span > 0 else -1.0
    f = np.asarray(rhs(t0, y), dtype=float)
    if not np.all(np.isfinite(f)):
        raise ODEError("right-hand side is not finite at the initial point")
    gvals = [ev.fn(t0, y) for ev in events]
    for ev, gv in zip(events, gvals):
        if gv == 0.0:
            raise ODEError(f"event {ev.name!r} fires at the initial point")

    h = 1e-3 * span
    hmin = 1e-12 * abs(span)
    ts, ys, fs = [t0], [y.copy()], [f.copy()]
    t = t0
    stop, which = "reached_end", None
    for _ in range(max_steps):
        if direction * (t1 - t) <= 0:
            break
        if direction * (t + h - t1) > 0:
            h = t1 - t
        y_new, f_new, err = dp_step(rhs, t, y, f, h)
        ok = np.all(np.isfinite(y_new)) and np.all(np.isfinite(f_new))
        if ok:
            e_lte = _scaled_error(err, y, y_new, tol)
            e_def = 0.0
            for tau in _DEFECT_TAU:
                tm = t + tau * h
                ym, dym = hermite(t, t + h, y, y_new, f, f_new, tm)
                fm = np.asarray(rhs(tm, ym), dtype=float)
                if not np.all(np.isfinite(fm)):
                    ok = False
                    break
                e_def = max(e_def, float(np.max(np.abs(dym - fm) / (1.0 + np.abs(ym)))) / tol)
        if not ok:
            h *= 0.25
            if abs(h) < hmin:
                stop = "step_failure"
                break
            continue
        if e_lte <= 1.0 and e_def <= 1.0:
            new_g = [ev.fn(t + h, y_new) for ev in events]
            hit = [k for k, (a, b) in enumerate(zip(gvals, new_g)) if a * b <= 0.0]
            if hit:
                t_ev, y_ev, k = _locate(rhs, t, y, f, h, events, gvals, hit)
                if t_ev != t:
                    ts.append(t_ev)
                    ys.append(y_ev)
                    fs.append(np.asarray(rhs(t_ev, y_ev), dtype=float))
                stop, which = "event", events[k].name
                break
            t = t + h
            y, f = y_new, f_new
            gvals = new_g
            ts.append(t)
            ys.append(y.copy())
            fs.append(f.copy())
        fac_lte = e_lte ** (-0.2) if e_lte > 0 else 5.0
        fac_def = e_def ** (-1 / 3) if e_def > 0 else 5.0
        h *= min(5.0, max(0.2, SAFETY * min(fac_lte, fac_def)))
        if abs(h) < hmin:
            stop = "step_failure"
            break
    else:
        stop = "step_failure"
    if len(ts) < 2:
        raise ODEError(f"integration failed immediately ({stop})")
    traj = Trajectory(np.array(ts), np.array(ys), np.array(fs), stop, rhs, tol, which, tuple(labels))
    return traj


def _locate(rhs, t, y, f, h, events, gvals, hit):
    """Bisect inside the step for the earliest sign change; return the last point before it."""
    best = None
    for k in hit:
        lo, hi = 0.0, h
        g_lo = gvals[k]
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            ym = dp_step(rhs, t, y, f, mid)[0] if mid != 0 else y
            gm = events[k].fn(t + mid, ym)
            if gm * g_lo > 0:
                lo = mid
            else:
                hi = mid
        if best is None or abs(lo) < abs(best[0]):
            best = (lo, k)
    lo, k = best
    y_ev = dp_step(rhs, t, y, f, lo)[0] if lo != 0 else y.copy()
    return t + lo, y_ev, k


def integrate_span(rhs, t_init, y0, span, tol=1e-8, events=(), labels=()):
    """Integrate over ``span = (a, b)`` from ``t_init`` in [a, b], returning an increasing grid."""
    a, b = float(span[0]), float(span[1])
    if not a < b:
        raise ODEError("span must be increasing")
    if not a <= t_init <= b:
        raise ODEError("initial point must lie inside the span")
    parts = []
    if t_init < b:
        parts.append(("fwd", integrate(rhs, t_init, y0, b, tol, events, labels)))
    if t_init > a:
        parts.append(("bwd", integrate(rhs, t_init, y0, a, tol, events, labels)))
    if len(parts) == 1 and parts[0][0] == "fwd":
        return parts[0][1]
    bwd = dict(parts)["bwd"]
    grid = bwd.grid[::-1]
    states = bwd.states[::-1]
    derivs = bwd.derivs[::-1]
    stop, which = bwd.stop_reason, bwd.event
    if "fwd" in dict(parts):
        fwd = dict(parts)["fwd"]
        grid = np.concatenate([grid, fwd.grid[1:]])
        states = np.concatenate([states, fwd.states[1:]])
        derivs = np.concatenate([derivs, fwd.derivs[1:]])
        if fwd.stop_reason != "reached_end":
            stop, which = fwd.stop_reason, fwd.event
    traj = Trajectory(grid, states, derivs, stop, rhs, tol, which, tuple(labels))
    traj.info["t_init"] = t_init
    return traj


def rk4_fixed(rhs, t0, y0, t1, n):
    """Classical fixed-step RK4 (used as an independent oracle)."""
    y = np.asarray(y0, dtype=float).copy()
    h = (t1 - t0) / n
    t = t0
    out = [y.copy()]
    for _ in range(n):
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t0 + (len(out)) * h
        out.append(y.copy())
    return np.linspace(t0, t1, n + 1), np.array(out)


# --------------------------------------------------------------------------- family ODEs


def phq_rhs(variant, c):
    """First-order system for the state (phi, phi', phi'')."""
    c = float(c)
    if variant not in ("i", "ii"):
        raise ODEError(f"variant must be 'i' or 'ii', not {variant!r}")

    def rhs(t, y):
        p, p1, p2 = y
        return np.array([p1, p2, phq_third(variant, c, p, p1, p2)])

    return rhs


def phq_third(variant, c, p, p1, p2):
    """phi''' from the equation."""
    if variant == "i":
        return (2.0 * (p * p2 - p1 * p1) * p2 + c * p * p1 * p1) / (p * p1)
    return (2.0 * p * p2 - 2.0 * p1 * p1 + c * p * p) * p1 / (p * p)


def chi_derivatives(variant, p, p1, p2, p3):
    """(chi', chi'') along a solution (chi'' is meaningless if p3 is a placeholder)."""
    if variant == "i":
        d1 = 2.0 * p1 / p - p2 / p1
        d2 = 2.0 * p2 / p - 2.0 * p1 * p1 / (p * p) - p3 / p1 + p2 * p2 / (p1 * p1)
    else:
        d1 = p2 / p1
        d2 = p3 / p1 - p2 * p2 / (p1 * p1)
    return d1, d2


def phq_residual(variant, c, p, p1, p2, p3):
    """Residual of the third-order equation, divided by its natural scale."""
    if variant == "i":
        lhs = p * p1 * p3
        rhs = 2.0 * (p * p2 - p1 * p1) * p2 + c * p * p1 * p1
    else:
        lhs = p * p * p3
        rhs = (2.0 * p * p2 - 2.0 * p1 * p1 + c * p * p) * p1
    return abs(lhs - rhs) / (1.0 + abs(lhs) + abs(rhs))


def solve_phq(variant, c, init, t_span, tol=1e-9):
    """Solve the third-order equation for phi; chi (with chi(t0) = 0) is attached as a quadrature.

    ``t_span = (t0, t1)`` with the initial data given at t0 (t1 < t0 integrates backwards).
    """
    p0, p1, p2 = (float(v) for v in init)
    if variant == "i" and p0 * p1 == 0:
        raise ODEError("variant i needs phi*phi' != 0 initially")
    if variant == "ii" and p1 == 0:
        raise ODEError("variant ii needs phi' != 0 initially")
    if p0 == 0:
        raise ODEError("phi must be nonzero initially")
    rhs = phq_rhs(variant, c)
    events = [Event("phi", lambda t, y: y[0]), Event("dphi", lambda t, y: y[1])]
    t0, t1 = (float(v) for v in t_span)
    traj = integrate_span(rhs, t0, [p0, p1, p2], (min(t0, t1), max(t0, t1)), tol, events,
                          labels=("phi", "dphi", "ddphi"))
    traj.info.update(variant=variant, c=float(c), kind="phq", t_init=t0)

    def chi_dot(t, y):
        return chi_derivatives(variant, y[0], y[1], y[2], 0.0)[0]

    traj.add_quadrature("chi", chi_dot, t0)
    return traj


def kappa_rhs(c):
    c = float(c)

    def rhs(y, s):
        k, k1 = s
        return np.array([k1, 2.0 / math.cos(y) ** 2 - c * math.exp(2.0 * k)])

    return rhs


POLE_MARGIN = 1e-3


def solve_kappa(c, init, y_span, tol=1e-9, y_init=None):
    """Solve kappa'' + c exp(2 kappa) = 2 sec^2 y; ``init`` is given at ``y_init`` (default 0 if inside)."""
    a, b = (float(v) for v in y_span)
    half = math.pi / 2
    if a <= -half + POLE_MARGIN or b >= half - POLE_MARGIN:
        raise ODEError("span must stay at least 1e-3 away from the poles of sec")
    if y_init is None:
        y_init = 0.0 if a <= 0.0 <= b else a
    traj = integrate_span(kappa_rhs(c), float(y_init), [float(v) for v in init], (a, b), tol,
                          labels=("kappa", "dkappa"))
    traj.info.update(c=float(c), kind="kappa")
    traj.info["log_type"] = is_log_type(traj, tol)
    return traj


def is_log_type(traj, tol):
    """True when kappa' = tan y uniformly (the degenerate solution family)."""
    dev = np.abs(traj.states[:, 1] - np.tan(traj.grid))
    return bool(np.max(dev) <= 100 * tol * (1.0 + np.max(np.abs(np.tan(traj.grid)))))


def kappa_residual(c, y, k, k1, k2):
    lhs = k2 + c * math.exp(2 * k)
    rhs = 2.0 / math.cos(y) ** 2
    return abs(lhs - rhs) / (1.0 + abs(rhs))


def zeta_relation_residual(traj, c, ts):
    """max |zeta' - (sec^2 y - c e^{2 kappa})| along the trajectory, zeta = kappa' - tan y."""
    out = 0.0
    for y in ts:
        s = traj.state_at(y)
        d = traj.rhs(y, s)
        zeta_p = d[1] - 1.0 / math.cos(y) ** 2
        target = 1.0 / math.cos(y) ** 2 - c * math.exp(2 * s[0])
        out = max(out, abs(zeta_p - target))
    return out


def classify_family(variant, traj, c, tol=1e-9):
    """proper / einstein / conformally_flat / eps_type from uniform tests on the nodes."""
    p, p1, p2 = traj.states[:, 0], traj.states[:, 1], traj.states[:, 2]
    thr = 100.0 * tol
    a = p1 * p1 - c * p * p                # phi'^2 - c phi^2
    b = p * p2 - p1 * p1                   # phi phi'' - phi'^2
    a_scale = 1.0 + np.max(p1 * p1 + abs(c) * p * p)
    b_scale = 1.0 + np.max(np.abs(p * p2) + p1 * p1)
    a_zero = np.max(np.abs(a)) <= thr * a_scale
    b_zero = np.max(np.abs(b)) <= thr * b_scale
    if variant == "i":
        if a_zero:
            return "conformally_flat"
        if b_zero:
            return "einstein"
        if c == 0 and np.max(np.abs(p2)) <= thr * (1.0 + np.max(np.abs(p1))):
            return "eps_type"
        return "proper"
    if variant == "ii":
        if a_zero:
            return "einstein"
        if b_zero:
            return "conformally_flat"
        return "proper"
    raise ODEError(f"variant must be 'i' or 'ii', not {variant!r}")


def trajectory_csv_rows(traj, residual=None):
    labels = list(traj.labels) or [f"y{k}" for k in range(traj.states.shape[1])]
    quad = sorted(traj.quadratures)
    header = ["t", *labels, *quad, "residual"]
    rows = []
    for n, (t, y) in enumerate(zip(traj.grid, traj.states)):
        r = residual(t, y) if residual is not None else 0.0
        rows.append([t, *y, *(traj.quadratures[q][0][n] for q in quad), r])
    return header, rows
