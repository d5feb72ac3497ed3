"""Pointwise weak-Einstein test, spectral fingerprint and case matching.

A 4-metric is weakly Einstein when ``T_ij = R_ikpq R_j^kpq`` is a multiple of
``g``; equivalently ``6 W e = -s e`` with ``(W e)_ij = W_ipjq e^pq``.

The fingerprint of a weakly Einstein point is the string
``(s; spec e; spec W+; spec W-)``, with spectra sorted ascending.  Because the
ordered spectra depend on the choice of Singer-Thorpe basis, the matcher
works with multisets and a search over pairings of W+ and W- eigenvalues.

The Singer-Thorpe templates (``d`` denotes the common diagonal shift):

* ``ari-a``: s = 0, W+- = +-(c2, c3, c4)
* ``ari-b``: e = (-lam, -mu, mu, lam), W+- = +-(c2, c3, c4) + (-s/12, -s/12, s/6)
* ``ari-c``: e = (-lam, -lam, lam, lam), W+- = +-(c2, c3, c4) + (-s/12, xi - s/12, s/6 - xi)

Nine special choices of ``(c2, c3, c4, xi)`` in case c give both W-blocks the
same unordered spectrum ``{sigma, -sigma/2, -sigma/2}``.  In case c a rotation
inside either e-eigenplane mixes the second and third basis bivectors, so only
the first diagonal entry of each block and the remaining pair of eigenvalues
are invariants.  The nine rows therefore fall into four classes
{i}, {ii, iii}, {iv, vii}, {v, vi, viii, ix}; the matcher reports the first
row of the class.  Reversing orientation swaps W+ and W- and maps the
classes as ii <-> iv, the others fixed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import ToleranceError, WelError
from .metric import CurvaturePack
from .tensor import jacobi_eigh, norm_g, orient, sym_eigen, triple_contract, weyl_blocks

WE_TOL = 1e-7
MATCH_TOL = 1e-6


def weyl_on_symmetric(W, h, g_inv):
    """(W h)_ij = W_ipjq h^pq."""
    hu = g_inv @ h @ g_inv
    return np.einsum("ipjq,pq->ij", W, hu)


def we_residuals(pack: CurvaturePack):
    """(direct, weyl_form) residuals of the weakly-Einstein condition."""
    if pack.dim != 4:
        raise WelError("the weakly-Einstein test needs dimension 4")
    g, g_inv = pack.g, pack.g_inv
    T = triple_contract(pack.riemann, g)
    trT = float(np.einsum("ij,ij->", g_inv, T))
    tn = norm_g(T, g_inv)
    direct = norm_g(T - trT / 4.0 * g, g_inv) / (1.0 + tn)
    e, s = pack.einstein, pack.scalar
    lhs = 6.0 * weyl_on_symmetric(pack.weyl, e, g_inv) + s * e
    weyl_form = norm_g(lhs, g_inv) / (1.0 + norm_g(e, g_inv) * (1.0 + abs(s)))
    return float(direct), float(weyl_form)


def is_weakly_einstein(pack, tol=WE_TOL):
    d, w = we_residuals(pack)
    return d < tol and w < tol


# --------------------------------------------------------------------------- signature


@dataclass
class SpectralSignature:
    point: np.ndarray
    scalar: float
    e_spec: np.ndarray
    wplus_spec: np.ndarray
    wminus_spec: np.ndarray
    we_residual: tuple
    frame: np.ndarray
    wplus_block: np.ndarray | None = None
    wminus_block: np.ndarray | None = None

    def scaled(self, k2):
        """Signature of k2*g: every curvature quantity picks up 1/k2."""
        return SpectralSignature(
            self.point, self.scalar / k2, self.e_spec / k2, self.wplus_spec / k2, self.wminus_spec / k2,
            self.we_residual, self.frame / np.sqrt(k2),
            None if self.wplus_block is None else self.wplus_block / k2,
            None if self.wminus_block is None else self.wminus_block / k2,
        )

    def flipped(self):
        """Signature for the opposite orientation (W+ and W- trade places)."""
        return SpectralSignature(
            self.point, self.scalar, self.e_spec, self.wminus_spec, self.wplus_spec, self.we_residual,
            self.frame, self.wminus_block, self.wplus_block,
        )

    def ratios(self):
        """Scale-free form: all eleven numbers divided by the largest magnitude."""
        v = np.concatenate([[self.scalar], self.e_spec, self.wplus_spec, self.wminus_spec])
        m = np.abs(v).max()
        return v / m if m > 0 else v

    def to_json(self, case=None):
        out = {
            "point": [float(x) for x in self.point],
            "s": float(self.scalar),
            "e_spec": [float(x) for x in self.e_spec],
            "wp_spec": [float(x) for x in self.wplus_spec],
            "wm_spec": [float(x) for x in self.wminus_spec],
            "residuals": {"direct": float(self.we_residual[0]), "weyl_form": float(self.we_residual[1])},
        }
        if case is not None:
            out["case"] = case.case_label
            out["params"] = {k: float(v) for k, v in case.parameters.items()}
            out["match_residual"] = float(case.match_residual)
        return out


def signature_at(pack: CurvaturePack, tol=WE_TOL, force=False) -> SpectralSignature:
    res = we_residuals(pack)
    if max(res) > tol and not force:
        raise ToleranceError(f"point is not weakly Einstein (residuals {res[0]:.3e}, {res[1]:.3e})")
    e_spec, frame = sym_eigen(pack.einstein, pack.g)
    frame = orient(frame)
    wp, wm = weyl_blocks(pack.weyl, pack.g, frame, check=False)
    return SpectralSignature(
        point=np.asarray(pack.point, float),
        scalar=float(pack.scalar),
        e_spec=e_spec,
        wplus_spec=jacobi_eigh(wp)[0],
        wminus_spec=jacobi_eigh(wm)[0],
        we_residual=res,
        frame=frame,
        wplus_block=wp,
        wminus_block=wm,
    )


# --------------------------------------------------------------------------- matching

# nine rows in units of s: (c2, c3, c4, xi), 24 W+, 24 W-
CHB_ROWS = {
    "i": ((0, 0, 0, "1/8"), (-2, 1, 1), (-2, 1, 1)),
    "ii": (("-1/4", "1/4", 0, 0), (-8, 4, 4), (4, -8, 4)),
    "iii": (("-1/4", 0, "1/4", "1/4"), (-8, 4, 4), (4, 4, -8)),
    "iv": (("1/4", "-1/4", 0, 0), (4, -8, 4), (-8, 4, 4)),
    "v": ((0, 0, 0, "1/4"), (-2, 4, -2), (-2, 4, -2)),
    "vi": ((0, "1/8", "-1/8", "1/8"), (-2, 4, -2), (-2, -2, 4)),
    "vii": (("1/4", 0, "-1/4", "1/4"), (4, 4, -8), (-8, 4, 4)),
    "viii": ((0, "-1/8", "1/8", "1/8"), (-2, -2, 4), (-2, 4, -2)),
    "ix": ((0, 0, 0, 0), (-2, -2, 4), (-2, -2, 4)),
}
CHB_ORDER = ("i", "ii", "iii", "iv", "v", "vi", "vii", "viii", "ix")
# rows sharing a class are indistinguishable from invariants; the first one names the class
CHB_CLASS = {"i": "i", "ii": "ii", "iii": "ii", "iv": "iv", "vii": "iv",
             "v": "v", "vi": "v", "viii": "v", "ix": "v"}
ORIENTATION_PAIRS = {"ii": "iv", "iv": "ii", "iii": "vii", "vii": "iii", "vi": "viii", "viii": "vi",
                     "i": "i", "v": "v", "ix": "ix"}
SIMPLE_EIGENVALUES = (-1 / 3, -1 / 12, 1 / 6)  # times s

LABELS = ("flat-type", "einstein", "conformally-flat", "ari-a", "ari-b", "ari-c") + tuple(
    f"chb-{r}" for r in CHB_ORDER) + ("none",)


@dataclass
class CaseMatch:
    case_label: str
    parameters: dict = field(default_factory=dict)
    match_residual: float = 0.0

    def flipped_label(self):
        if self.case_label.startswith("chb-"):
            return "chb-" + CHB_CLASS[ORIENTATION_PAIRS[self.case_label[4:]]]
        return self.case_label


def _row_invariants(row):
    """(first entries, sorted remaining pairs) of a table row in units of s/24."""
    _, wp, wm = CHB_ROWS[row]
    return (wp[0], wm[0]), (tuple(sorted(wp[1:])), tuple(sorted(wm[1:])))


def chb_class_of(p1, m1, prest, mrest, s, atol):
    """Best table class for case-c invariants; returns (row, residual)."""
    best, best_res = None, np.inf
    for row in CHB_ORDER:
        (a, b), (pr, mr) = _row_invariants(row)
        k = s / 24.0
        res = max(abs(p1 - a * k), abs(m1 - b * k),
                  *np.abs(np.sort(prest) - np.array(pr) * k), *np.abs(np.sort(mrest) - np.array(mr) * k))
        if res < best_res - 1e-300:
            best, best_res = CHB_CLASS[row], res
    return best, best_res


def simple_eigenvalue(spec, atol):
    """The eigenvalue of multiplicity one when the other two coincide, else None."""
    a, b, c = np.sort(spec)
    if abs(a - b) <= atol and abs(b - c) > atol:
        return c
    if abs(b - c) <= atol and abs(a - b) > atol:
        return a
    return None


def _fit_b(P, M, s):
    target = np.array([-s / 12, -s / 12, s / 6])
    best = (np.inf, None)
    for perm in itertools.permutations(range(3)):
        Mp = M[list(perm)]
        avg = 0.5 * (P + Mp)
        order = np.argsort(avg, kind="stable")
        if s < 0:
            order = order[::-1]
        res = float(np.abs(avg[order] - target).max())
        if res < best[0]:
            c = 0.5 * (P - Mp)[order]
            best = (res, c)
    return best


def _fit_a(P, M):
    best = (np.inf, None)
    for perm in itertools.permutations(range(3)):
        Mp = M[list(perm)]
        res = float(np.abs(P + Mp).max())
        if res < best[0]:
            best = (res, P.copy())
    return best


def _fit_c(sig, s, atol):
    """Case-c fit from the canonical first diagonal entries; returns (res, params, rest-pairs)."""
    if sig.wplus_block is None or sig.wminus_block is None:
        return np.inf, None, None
    WP, WM = sig.wplus_block, sig.wminus_block
    coupling = max(np.abs(WP[0, 1:]).max(), np.abs(WM[0, 1:]).max())
    p1, m1 = WP[0, 0], WM[0, 0]
    res = float(max(coupling, abs(p1 + m1 + s / 6.0)))
    prest = jacobi_eigh(WP[1:, 1:])[0]
    mrest = jacobi_eigh(WM[1:, 1:])[0]
    c2 = float(0.5 * (p1 - m1))
    # pair p2 with the m eigenvalue that keeps xi closest to s/8 (the symmetric choice)
    best = None
    for mpair in (mrest, mrest[::-1]):
        xi = float(0.5 * (prest[0] + mpair[0]) + s / 12.0)
        c3 = float(0.5 * (prest[0] - mpair[0]))
        key = abs(xi - s / 8.0)
        if best is None or key < best[0] - 1e-15:
            best = (key, dict(c2=c2, c3=c3, c4=-c2 - c3, xi=xi))
    return res, best[1], (p1, m1, prest, mrest)


def match_case(sig: SpectralSignature, tol=MATCH_TOL) -> CaseMatch:
    s = sig.scalar
    E, P, M = np.sort(sig.e_spec), np.sort(sig.wplus_spec), np.sort(sig.wminus_spec)
    scale = 1.0 + abs(s) + np.abs(E).max() + max(np.abs(P).max(), np.abs(M).max())
    atol = tol * scale
    e_zero = np.abs(E).max() <= atol
    w_zero = max(np.abs(P).max(), np.abs(M).max()) <= atol

    if e_zero and w_zero:
        if abs(s) <= atol:
            return CaseMatch("flat-type", {"s": s}, 0.0)
        return CaseMatch("conformally-flat", {"s": s}, 0.0)
    if e_zero:
        return CaseMatch("einstein", {"s": s}, float(np.abs(E).max() / scale))
    if w_zero:
        return CaseMatch("conformally-flat", {"s": s}, float(max(np.abs(P).max(), np.abs(M).max()) / scale))

    candidates = []
    sym_res = max(abs(E[0] + E[3]), abs(E[1] + E[2]))
    lam, mu = E[3], E[2]

    # case c: e = (-lam, -lam, lam, lam)
    if abs(E[0] - E[1]) <= atol and abs(E[2] - E[3]) <= atol and sym_res <= atol:
        res, prm, inv = _fit_c(sig, s, atol)
        if prm is not None:
            params = dict(lam=float(0.5 * (E[2] + E[3])), **prm)
            label = "ari-c"
            if res <= atol and s != 0.0:
                p1, m1, prest, mrest = inv
                row, row_res = chb_class_of(p1, m1, prest, mrest, s, atol)
                sigma = simple_eigenvalue(P, atol)
                if row_res <= atol and sigma is not None:
                    if min(abs(sigma - f * s) for f in SIMPLE_EIGENVALUES) <= atol:
                        label = f"chb-{row}"
                        params["sigma"] = float(sigma)
            candidates.append((res, label, params))

    # case b: e = (-lam, -mu, mu, lam)
    if sym_res <= atol:
        res, c = _fit_b(P, M, s)
        if c is not None:
            params = dict(lam=float(lam), mu=float(mu), c2=float(c[0]), c3=float(c[1]), c4=float(c[2]))
            sigma = simple_eigenvalue(P, atol)
            if sigma is not None and s != 0.0:
                params["sigma"] = float(sigma)
            candidates.append((max(res, sym_res), "ari-b", params))

    # case a: s = 0, W- = -W+
    if abs(s) <= atol:
        res, c = _fit_a(P, M)
        params = {f"mu{k + 1}": float(E[k]) for k in range(4)}
        params.update(c2=float(c[0]), c3=float(c[1]), c4=float(c[2]))
        candidates.append((res, "ari-a", params))

    for res, label, params in candidates:
        if res <= atol:
            shape = _weyl_shape(P, M, s, atol)
            if shape and label == "ari-b":
                params["weyl_shape_row"] = shape
            return CaseMatch(label, params, float(res / scale))
    if candidates:
        res = min(c[0] for c in candidates)
        return CaseMatch("none", {}, float(res / scale))
    return CaseMatch("none", {}, float(sym_res / scale))


def _weyl_shape(P, M, s, atol):
    """Index of the table row whose W-spectra multisets agree with (P, M), if any (informational)."""
    if s == 0.0:
        return None
    k = s / 24.0
    for idx, row in enumerate(CHB_ORDER):
        _, wp, wm = CHB_ROWS[row]
        if (np.abs(np.sort(P) - np.sort(np.array(wp) * k)).max() <= atol
                and np.abs(np.sort(M) - np.sort(np.array(wm) * k)).max() <= atol):
            return float(idx + 1)
    return None
