"""Pointwise multilinear algebra in dimension <= 4.

Index conventions
-----------------
A (0,4) curvature tensor ``R[a, b, c, d]`` has ``R[0,1,0,1] > 0`` on round
spheres and Ricci contraction ``r[b, d] = g^{ac} R[a, b, c, d]``.  The
Kulkarni-Nomizu product is

    (h o k)_{abcd} = h_ac k_bd + h_bd k_ac - h_ad k_bc - h_bc k_ad

so the unit sphere is ``R = (g o g) / 2``.  Bivectors act through
``(W beta)_ab = 1/2 W_abcd beta^cd`` and carry the inner product
``<alpha, beta> = 1/2 alpha_ab beta^ab``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import FrameError, NotPositiveDefiniteError, TraceError

PD_TOL = 1e-12


# --------------------------------------------------------------------------- eigen


def jacobi_eigh(a, tol=1e-15, max_sweeps=100):
    """Cyclic Jacobi eigen-decomposition of a small symmetric matrix.

    Returns ascending eigenvalues and the orthogonal matrix of eigenvectors
    (columns).  Ties keep the order in which Jacobi produced them.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(n), v
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                a[p, q] = a[q, p] = 0.0
                v = v @ rot
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def leading_minors(g):
    g = np.asarray(g, dtype=float)
    return np.array([np.linalg.det(g[:k, :k]) for k in range(1, g.shape[0] + 1)])


def check_positive_definite(g, tol=PD_TOL):
    """Raise unless every leading principal minor exceeds ``tol`` (scaled)."""
    g = np.asarray(g, dtype=float)
    if not np.all(np.isfinite(g)):
        raise NotPositiveDefiniteError("metric has non-finite entries")
    if not np.allclose(g, g.T, rtol=0, atol=1e-12 * (1 + np.abs(g).max())):
        raise NotPositiveDefiniteError("metric is not symmetric")
    scale = float(np.abs(g).max())  # scale-invariant test
    minors = leading_minors(g)
    for k, m in enumerate(minors, start=1):
        if not m > tol * scale**k:
            raise NotPositiveDefiniteError(f"leading minor {k} is {m:.3e}; metric not positive definite")
    return g


def sym_eigen(m, metric=None):
    """Generalized symmetric eigenproblem ``m v = lam metric v``.

    Returns ``(eigenvalues ascending, frame)`` where the columns of ``frame``
    are metric-orthonormal eigenvectors.
    """
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    metric = np.eye(n) if metric is None else check_positive_definite(metric)
    chol = np.linalg.cholesky(metric)
    linv = np.linalg.inv(chol)
    a = linv @ m @ linv.T
    w, q = jacobi_eigh(a)
    frame = linv.T @ q
    return w, frame


def orient(frame):
    """Flip the last column if needed so the frame is positively oriented."""
    frame = np.array(frame, dtype=float)
    if np.linalg.det(frame) < 0:
        frame[:, -1] *= -1.0
    return frame


# --------------------------------------------------------------------------- contractions


def norm_g(t, g_inv):
    """Norm of a (0,2) tensor: sqrt(t_ij t_kl g^ik g^jl)."""
    return float(np.sqrt(max(np.einsum("ij,kl,ik,jl->", t, t, g_inv, g_inv), 0.0)))


def norm4_g(t, g_inv):
    v = np.einsum("abcd,ap,bq,cr,ds,pqrs->", t, g_inv, g_inv, g_inv, g_inv, t)
    return float(np.sqrt(max(v, 0.0)))


def norm3_g(t, g_inv):
    v = np.einsum("abc,ap,bq,cr,pqr->", t, g_inv, g_inv, g_inv, t)
    return float(np.sqrt(max(v, 0.0)))


def raise_all(t, g_inv):
    """Raise every index of a (0,k) tensor."""
    out = t
    for axis in range(t.ndim):
        out = np.moveaxis(np.tensordot(g_inv, out, axes=([1], [axis])), 0, axis)
    return out


def triple_contract(R, g):
    """T_ij = R_ikpq R_j^{kpq}."""
    g_inv = np.linalg.inv(g)
    up = np.einsum("jabc,ka,pb,qc->jkpq", R, g_inv, g_inv, g_inv)
    t = np.einsum("ikpq,jkpq->ij", R, up)
    return 0.5 * (t + t.T)


def ricci_contract(R, g_inv):
    return np.einsum("ac,abcd->bd", g_inv, R)


def kulkarni_nomizu(h, k):
    return (
        np.einsum("ac,bd->abcd", h, k)
        + np.einsum("bd,ac->abcd", h, k)
        - np.einsum("ad,bc->abcd", h, k)
        - np.einsum("bc,ad->abcd", h, k)
    )


def weyl_from_riemann(R, g, ricci=None, scalar=None):
    """Totally trace-free part of R (n >= 3); zero for n = 3."""
    n = g.shape[0]
    g_inv = np.linalg.inv(g)
    if ricci is None:
        ricci = ricci_contract(R, g_inv)
    if scalar is None:
        scalar = float(np.einsum("ij,ij->", g_inv, ricci))
    if n < 3:
        return np.zeros_like(R)
    return R - kulkarni_nomizu(ricci, g) / (n - 2) + scalar * kulkarni_nomizu(g, g) / (2 * (n - 1) * (n - 2))


def riemann_from_parts(weyl, einstein, scalar, g):
    """Inverse of the Weyl decomposition in dimension 4."""
    return weyl + 0.5 * kulkarni_nomizu(einstein, g) + scalar / 24.0 * kulkarni_nomizu(g, g)


def symmetry_defects(R):
    """Violations of the algebraic curvature symmetries, relative to 1 + max |R|."""
    scale = 1.0 + np.abs(R).max()
    anti1 = np.abs(R + R.transpose(1, 0, 2, 3)).max()
    anti2 = np.abs(R + R.transpose(0, 1, 3, 2)).max()
    pair = np.abs(R - R.transpose(2, 3, 0, 1)).max()
    bianchi = np.abs(R + R.transpose(0, 2, 3, 1) + R.transpose(0, 3, 1, 2)).max()
    return {k: float(v / scale) for k, v in
            dict(antisym_ij=anti1, antisym_kl=anti2, pair=pair, bianchi=bianchi).items()}


# --------------------------------------------------------------------------- bivectors

# index pairs for u1^u2 +- u3^u4, u1^u3 +- u4^u2, u1^u4 +- u2^u3
_PAIRS = (((0, 1), (2, 3)), ((0, 2), (3, 1)), ((0, 3), (1, 2)))


def wedge(u, v):
    return np.outer(u, v) - np.outer(v, u)


def bivector_inner(alpha, beta, g_inv=None):
    if g_inv is None:
        return 0.5 * float(np.sum(alpha * beta))
    return 0.5 * float(np.einsum("ab,cd,ac,bd->", alpha, beta, g_inv, g_inv))


@dataclass(frozen=True)
class BivectorFrame:
    """The length-sqrt(2) bases of self-dual and anti-self-dual bivectors of a frame.

    ``frame`` columns are the vectors u1..u4; bivectors are stored with
    lowered indices relative to ``metric``.
    """

    plus: tuple
    minus: tuple
    frame: np.ndarray
    metric: np.ndarray

    @classmethod
    def from_frame(cls, frame, metric=None):
        frame = np.asarray(frame, dtype=float)
        metric = np.eye(4) if metric is None else np.asarray(metric, dtype=float)
        low = metric @ frame  # lowered covectors as columns
        cols = [low[:, i] for i in range(4)]
        plus, minus = [], []
        for (a, b), (c, d) in _PAIRS:
            x = wedge(cols[a], cols[b])
            y = wedge(cols[c], cols[d])
            plus.append(x + y)
            minus.append(x - y)
        return cls(tuple(plus), tuple(minus), frame, metric)

    @classmethod
    def standard(cls):
        return cls.from_frame(np.eye(4))

    def unit(self):
        """All six bivectors rescaled to unit length, plus first."""
        return [b / np.sqrt(2.0) for b in self.plus + self.minus]


def check_frame(frame, g, tol=1e-9):
    frame = np.asarray(frame, dtype=float)
    gram = frame.T @ g @ frame
    if np.abs(gram - np.eye(frame.shape[1])).max() > tol:
        raise FrameError("frame is not orthonormal")
    if np.linalg.det(frame) <= 0:
        raise FrameError("frame is not positively oriented")


def to_frame(T, frame):
    """Components of a (0,k) tensor in the frame whose vectors are the columns."""
    out = T
    for axis in range(T.ndim):
        out = np.moveaxis(np.tensordot(frame, out, axes=([0], [axis])), 0, axis)
    return out


def bivector_matrix(W, frame):
    """6x6 matrix <beta_k, W beta_l> over the unit (plus, minus) bivectors of a frame."""
    Wf = to_frame(W, frame)
    basis = BivectorFrame.standard().unit()
    return np.array([[0.25 * np.einsum("ab,abcd,cd->", bk, Wf, bl) for bl in basis] for bk in basis])


def weyl_blocks(W, g, frame, tol=1e-9, check=True):
    """Self-dual and anti-self-dual 3x3 blocks of W in the given positive orthonormal frame."""
    W = np.asarray(W, dtype=float)
    g = np.asarray(g, dtype=float)
    check_frame(frame, g)
    wnorm = float(np.abs(W).max())
    if check:
        g_inv = np.linalg.inv(g)
        tr = np.abs(ricci_contract(W, g_inv)).max()
        if tr > tol * (1.0 + wnorm):
            raise TraceError(f"tensor is not trace-free (trace {tr:.3e})")
    m = bivector_matrix(W, frame)
    m = 0.5 * (m + m.T)
    cross = np.abs(m[:3, 3:]).max()
    if check and cross > tol * (1.0 + wnorm):
        raise TraceError(f"bivector action is not block diagonal (cross {cross:.3e})")
    return m[:3, :3].copy(), m[3:, 3:].copy()


def weyl_from_blocks(wplus, wminus):
    """Algebraic Weyl tensor on Euclidean 4-space with prescribed bivector blocks.

    ``wplus``/``wminus`` are 3x3 symmetric trace-free matrices in the unit
    standard bivector bases; ``weyl_blocks(weyl_from_blocks(a, b), I, I)`` is
    ``(a, b)``.
    """
    basis = BivectorFrame.standard().unit()
    W = np.zeros((4, 4, 4, 4))
    blocks = (np.asarray(wplus, float), np.asarray(wminus, float))
    for half, blk in enumerate(blocks):
        for k in range(3):
            for l in range(3):
                if blk[k, l] != 0.0:
                    W += blk[k, l] * np.einsum("ab,cd->abcd", basis[3 * half + k], basis[3 * half + l])
    return W


# --------------------------------------------------------------------------- frame changes


def signed_permutations(n=4, positive_only=True):
    """All signed permutation matrices, optionally only those with det = +1."""
    out = []
    for perm in itertools.permutations(range(n)):
        for signs in itertools.product((1.0, -1.0), repeat=n):
            p = np.zeros((n, n))
            for i, j in enumerate(perm):
                p[j, i] = signs[i]
            if positive_only and np.linalg.det(p) < 0:
                continue
            out.append(p)
    return out


def constant_curvature_tensor(g, k=1.0):
    g = np.asarray(g, dtype=float)
    return 0.5 * k * kulkarni_nomizu(g, g)
