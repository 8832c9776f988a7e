"""Hermitian eigensolver and tridiagonal utilities.

Dense Hermitian matrices are reduced to real symmetric tridiagonal form by
Householder reflections (batched over leading axes), then diagonalized with the
implicit QL algorithm with Wilkinson-type shifts.  Monte Carlo code mostly
needs only counts and determinants, which come straight from the tridiagonal
form via Sturm sequences and continuants.
"""

from __future__ import annotations

import math

import numpy as np

QL_MAX_ITERATIONS = 50
_EPS = np.finfo(float).eps
_PIVMIN = 1e-290


class EigenConvergenceError(RuntimeError):
    """Raised when the QL iteration exceeds its per-eigenvalue iteration cap."""


def householder_tridiagonalize(a, compute_q: bool = False):
    """Reduce Hermitian matrices to real symmetric tridiagonal form.

    Parameters
    ----------
    a : array_like, shape (..., n, n)
        Hermitian matrices (only exact Hermiticity is assumed, not checked).
    compute_q : bool
        Also return the unitary ``U`` with ``a = U T U^*``.

    Returns
    -------
    d : ndarray, shape (..., n)
        Diagonal of ``T``.
    e : ndarray, shape (..., n - 1)
        Non-negative off-diagonal of ``T``.
    u : ndarray, shape (..., n, n), optional
    """
    a = np.array(a, dtype=complex, copy=True)
    n = a.shape[-1]
    batch = a.shape[:-2]
    q = None
    if compute_q:
        q = np.broadcast_to(np.eye(n, dtype=complex), a.shape).copy()
    for k in range(n - 2):
        x = a[..., k + 1 :, k]
        norm = np.linalg.norm(x, axis=-1)
        x0 = x[..., 0]
        phase = np.where(np.abs(x0) > 0, x0 / np.where(np.abs(x0) > 0, np.abs(x0), 1.0), 1.0)
        alpha = -phase * norm
        v = x.copy()
        v[..., 0] -= alpha
        vnorm = np.linalg.norm(v, axis=-1)
        active = vnorm > 0
        v = v / np.where(active, vnorm, 1.0)[..., None]
        v[~active] = 0.0
        sub = a[..., k + 1 :, k + 1 :]
        p = (sub @ v[..., None])[..., 0]
        kk = np.einsum("...i,...i->...", v.conj(), p).real
        w = p - kk[..., None] * v
        sub -= 2 * (v[..., :, None] * w.conj()[..., None, :] + w[..., :, None] * v.conj()[..., None, :])
        col = np.zeros(x.shape, dtype=complex)
        col[..., 0] = np.where(active, alpha, x0)
        a[..., k + 1 :, k] = col
        a[..., k, k + 1 :] = col.conj()
        if compute_q:
            qs = q[..., :, k + 1 :]
            qs -= 2 * (qs @ v[..., None]) * v.conj()[..., None, :]
    d = np.real(np.diagonal(a, axis1=-2, axis2=-1)).copy()
    off = np.diagonal(a, offset=-1, axis1=-2, axis2=-1)
    e = np.abs(off)
    if not compute_q:
        return d, e
    # diagonal phases turning the complex off-diagonal into |off|
    unit = np.where(e > 0, off / np.where(e > 0, e, 1.0), 1.0)
    phases = np.ones(batch + (n,), dtype=complex)
    if n > 1:
        phases[..., 1:] = np.cumprod(unit, axis=-1)
    return d, e, q * phases[..., None, :]


def tridiagonal_ql(d, e, compute_vectors: bool = False):
    """Eigen-decomposition of a real symmetric tridiagonal matrix by implicit QL.

    Parameters
    ----------
    d : array_like, shape (n,)
        Diagonal.
    e : array_like, shape (n - 1,)
        Off-diagonal.
    compute_vectors : bool
        Accumulate the orthogonal eigenvector matrix.

    Returns
    -------
    w : ndarray
        Eigenvalues in ascending order.
    z : ndarray, optional
        Columns are the matching eigenvectors.
    """
    d = [float(v) for v in d]
    n = len(d)
    e = [float(v) for v in e] + [0.0]
    if len(e) != n:
        raise ValueError("off-diagonal must have length n - 1")
    z = np.eye(n) if compute_vectors else None
    for l in range(n):
        iterations = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= _EPS * dd:
                    break
                m += 1
            if m == l:
                break
            iterations += 1
            if iterations > QL_MAX_ITERATIONS:
                raise EigenConvergenceError(f"QL did not converge for eigenvalue {l}")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            deflated = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if z is not None:
                    zi = z[:, i].copy()
                    z[:, i] = c * zi - s * z[:, i + 1]
                    z[:, i + 1] = s * zi + c * z[:, i + 1]
                i -= 1
            if deflated:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    w = np.array(d)
    order = np.argsort(w, kind="stable")
    if z is None:
        return w[order]
    return w[order], z[:, order]


def eigh(h, compute_vectors: bool = True):
    """Eigenvalues (ascending) and optionally eigenvectors of one Hermitian matrix."""
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("expected a square matrix")
    if h.shape[0] == 1:
        w = np.real(h[0:1, 0]).astype(float)
        return (w, np.ones((1, 1), dtype=complex)) if compute_vectors else w
    if not compute_vectors:
        d, e = householder_tridiagonalize(h)
        return tridiagonal_ql(d, e)
    d, e, u = householder_tridiagonalize(h, compute_q=True)
    w, z = tridiagonal_ql(d, e, compute_vectors=True)
    return w, u @ z


def sturm_count(d, e2, x):
    """Number of eigenvalues strictly below ``x`` for batches of tridiagonals.

    Parameters
    ----------
    d : ndarray, shape (B, n)
        Diagonals.
    e2 : ndarray, shape (B, n - 1)
        Squared off-diagonals.
    x : ndarray, shape (M,) or (B, M)
        Thresholds.

    Returns
    -------
    ndarray of int, shape (B, M)
    """
    d = np.atleast_2d(np.asarray(d, dtype=float))
    e2 = np.asarray(e2, dtype=float).reshape(d.shape[0], -1)
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = np.broadcast_to(x, (d.shape[0], x.size))
    count = np.zeros(x.shape, dtype=np.int64)
    q = d[:, :1] - x
    q = np.where(np.abs(q) < _PIVMIN, -_PIVMIN, q)
    count += q < 0
    for i in range(1, d.shape[1]):
        q = d[:, i : i + 1] - x - e2[:, i - 1 : i] / q
        q = np.where(np.abs(q) < _PIVMIN, -_PIVMIN, q)
        count += q < 0
    return count


def tridiagonal_eigvalsh(d, e2, iterations: int = 64):
    """All eigenvalues of a batch of tridiagonals by vectorized bisection.

    Returns an array of shape (B, n) sorted along the last axis.
    """
    d = np.atleast_2d(np.asarray(d, dtype=float))
    e2 = np.asarray(e2, dtype=float).reshape(d.shape[0], -1)
    bsz, n = d.shape
    e = np.sqrt(e2)
    radius = np.zeros((bsz, n))
    radius[:, :-1] += e
    radius[:, 1:] += e
    lo = np.min(d - radius, axis=1, keepdims=True) - 1e-12
    hi = np.max(d + radius, axis=1, keepdims=True) + 1e-12
    lo = np.repeat(lo, n, axis=1)
    hi = np.repeat(hi, n, axis=1)
    target = np.arange(n)[None, :]
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        below = sturm_count(d, e2, mid) > target
        hi = np.where(below, mid, hi)
        lo = np.where(below, lo, mid)
        if np.all(hi - lo <= 4 * _EPS * np.maximum(np.abs(lo), np.abs(hi))):
            break
    return 0.5 * (lo + hi)


def log_charpoly(d, e2, mu):
    """``log det(mu - T)`` for batches of tridiagonals, complex ``mu`` allowed.

    Uses the three-term continuant with per-step renormalization so the result
    is overflow-free. Returns a complex array of shape (B,) (principal-branch
    imaginary part is not meaningful across samples; only ``exp`` of sums is).
    """
    d = np.atleast_2d(np.asarray(d, dtype=float))
    e2 = np.asarray(e2, dtype=float).reshape(d.shape[0], -1)
    mu = complex(mu)
    prev = np.ones(d.shape[0], dtype=complex)
    cur = mu - d[:, 0]
    logs = np.zeros(d.shape[0], dtype=complex)
    for i in range(1, d.shape[1]):
        nxt = (mu - d[:, i]) * cur - e2[:, i - 1] * prev
        mag = np.abs(nxt)
        mag = np.where(mag > 0, mag, 1.0)
        prev = cur / mag
        cur = nxt / mag
        logs += np.log(mag)
    return logs + np.log(cur.astype(complex))


def resolvent_trace(d, e2, nu):
    """``Tr (nu - T)**-1`` for batches of tridiagonals at a non-real ``nu``.

    Differentiates ``log det(nu - T) = sum log q_i`` along the pivot
    recurrence ``q_i = nu - d_i - e2_{i-1} / q_{i-1}``.
    """
    d = np.atleast_2d(np.asarray(d, dtype=float))
    e2 = np.asarray(e2, dtype=float).reshape(d.shape[0], -1)
    nu = complex(nu)
    if nu.imag == 0:
        raise ValueError("resolvent needs a non-real argument")
    q = nu - d[:, 0]
    dq = np.ones(d.shape[0], dtype=complex)
    total = dq / q
    for i in range(1, d.shape[1]):
        dq = 1 + e2[:, i - 1] * dq / (q * q)
        q = nu - d[:, i] - e2[:, i - 1] / q
        total += dq / q
    return total
