"""Algebraic curvature tensors on oriented Euclidean 4-space from Singer-Thorpe data."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import STDataError
from .metric import pack_from_riemann
from .tensor import riemann_from_parts, weyl_from_blocks
from .weakly_einstein import CHB_ORDER, CHB_ROWS, SIMPLE_EIGENVALUES, we_residuals

INVARIANT_TOL = 1e-12


@dataclass(frozen=True)
class STData:
    """Singer-Thorpe data of one of the three cases.

    ``e_diag`` is the Einstein tensor in the standard basis; the Weyl blocks
    are diagonal in the unit bivector bases built from that basis.
    """

    case: str
    s: float
    e_diag: tuple
    c2: float = 0.0
    c3: float = 0.0
    c4: float = 0.0
    xi: float = 0.0

    def __post_init__(self):
        if self.case not in ("a", "b", "c"):
            raise STDataError(f"case must be a, b or c, not {self.case!r}")
        if len(self.e_diag) != 4:
            raise STDataError("e_diag needs four entries")
        scale = 1.0 + abs(self.s) + max(abs(float(v)) for v in (self.c2, self.c3, self.c4, self.xi))
        if abs(self.c2 + self.c3 + self.c4) > INVARIANT_TOL * scale:
            raise STDataError("c2 + c3 + c4 must vanish")
        e = [float(v) for v in self.e_diag]
        escale = 1.0 + max(abs(v) for v in e)
        if self.case == "a":
            if abs(sum(e)) > INVARIANT_TOL * escale or self.s != 0:
                raise STDataError("case a needs trace-free e and s = 0")
        elif self.case == "b":
            if abs(e[0] + e[3]) > INVARIANT_TOL * escale or abs(e[1] + e[2]) > INVARIANT_TOL * escale:
                raise STDataError("case b needs e = (-lam, -mu, mu, lam)")
        else:
            if abs(e[0] - e[1]) > INVARIANT_TOL * escale or abs(e[2] - e[3]) > INVARIANT_TOL * escale or \
                    abs(e[0] + e[3]) > INVARIANT_TOL * escale:
                raise STDataError("case c needs e = (-lam, -lam, lam, lam)")
        if self.case != "c" and self.xi != 0:
            raise STDataError("xi is only meaningful in case c")

    @classmethod
    def case_a(cls, mu, c):
        return cls("a", 0.0, tuple(float(m) for m in mu), *map(float, c))

    @classmethod
    def case_b(cls, s, lam, mu, c):
        return cls("b", float(s), (-lam, -mu, mu, lam), *map(float, c))

    @classmethod
    def case_c(cls, s, lam, c, xi):
        return cls("c", float(s), (-lam, -lam, lam, lam), *map(float, c), float(xi))

    def weyl_diagonals(self):
        """Diagonals of W+ and W- prescribed by the case."""
        c = np.array([self.c2, self.c3, self.c4], dtype=float)
        s = self.s
        if self.case == "a":
            shift = np.zeros(3)
        elif self.case == "b":
            shift = np.array([-s / 12, -s / 12, s / 6])
        else:
            shift = np.array([-s / 12, self.xi - s / 12, s / 6 - self.xi])
        return c + shift, -c + shift


def build(data: STData):
    """Curvature tensor (metric = identity) realising the data."""
    wp, wm = data.weyl_diagonals()
    W = weyl_from_blocks(np.diag(wp), np.diag(wm))
    e = np.diag(np.asarray(data.e_diag, dtype=float))
    return riemann_from_parts(W, e, data.s, np.eye(4))


def verify_we_algebraic(R):
    """Largest of the two weakly-Einstein residuals of R over the flat metric."""
    return max(we_residuals(pack_from_riemann(np.asarray(R, float), np.eye(4))))


def random_stdata(rng, case=None):
    case = case or rng.choice(["a", "b", "c"])
    c = rng.normal(size=3)
    c -= c.mean()
    if case == "a":
        mu = rng.normal(size=4)
        mu -= mu.mean()
        return STData.case_a(mu, c)
    s = rng.normal() * 5
    if case == "b":
        lam, mu = rng.normal(size=2)
        return STData.case_b(s, lam, mu, c)
    return STData.case_c(s, rng.normal(), c, rng.normal() * 3)


# --------------------------------------------------------------------------- table


@dataclass(frozen=True)
class TableRow:
    label: str
    data: tuple       # (c2, c3, c4, xi)
    wplus: tuple
    wminus: tuple
    sigma: object     # simple eigenvalue shared by both blocks


def _frac(v):
    return Fraction(v)


def nine_case_table(s):
    """The nine case-c choices with equal unordered W-spectra.

    With an ``int`` or ``Fraction`` argument every entry is an exact Fraction.
    """
    if s == 0:
        raise STDataError("the table needs s != 0")
    exact = isinstance(s, (int, Fraction))
    sv = Fraction(s) if exact else float(s)
    rows = []
    for label in CHB_ORDER:
        coeffs, wp24, wm24 = CHB_ROWS[label]
        c2, c3, c4, xi = (_frac(v) * sv if exact else float(_frac(v)) * sv for v in coeffs)
        shift = (-sv / 12, xi - sv / 12, sv / 6 - xi)
        wplus = tuple(c + d for c, d in zip((c2, c3, c4), shift))
        wminus = tuple(-c + d for c, d in zip((c2, c3, c4), shift))
        # consistency with the tabulated 24 W entries
        for got, want in ((wplus, wp24), (wminus, wm24)):
            for g_, w_ in zip(got, want):
                if exact:
                    assert 24 * g_ == w_ * sv, (label, got, want)
                else:
                    assert abs(24 * g_ - w_ * sv) <= 1e-12 * abs(sv), (label, got, want)
        sigma = _simple(wplus)
        if exact:
            assert sigma == _simple(wminus) and sorted(wplus) == sorted(wminus), label
        else:
            assert all(abs(a - b) <= 1e-12 * abs(sv) for a, b in zip(sorted(wplus), sorted(wminus))), label
            assert abs(sigma - _simple(wminus)) <= 1e-12 * abs(sv), label
        assert any(sigma == f * sv if exact else abs(sigma - f * sv) <= 1e-12 * abs(sv)
                   for f in _exact_fractions(exact)), label
        rows.append(TableRow(label, (c2, c3, c4, xi), wplus, wminus, sigma))
    return rows


def _exact_fractions(exact):
    return (Fraction(-1, 3), Fraction(-1, 12), Fraction(1, 6)) if exact else SIMPLE_EIGENVALUES


def _simple(vals):
    a, b, c = sorted(vals)
    if a == b and b != c:
        return c
    if b == c and a != b:
        return a
    if isinstance(a, float) and abs(a - b) < abs(b - c) * 1e-9:
        return c
    if isinstance(a, float) and abs(b - c) < abs(a - b) * 1e-9:
        return a
    raise AssertionError(f"no simple eigenvalue in {vals}")


def row_stdata(row: TableRow, s, lam=1.0):
    """Case-c STData realising a table row (computed for the same s)."""
    c2, c3, c4, xi = (float(v) for v in row.data)
    return STData.case_c(float(s), lam, (c2, c3, c4), xi)


def table_csv_rows(rows):
    header = ["case", "c2", "c3", "c4", "xi", "wp1", "wp2", "wp3", "wm1", "wm2", "wm3"]
    body = [[r.label, *r.data, *r.wplus, *r.wminus] for r in rows]
    return header, body
