"""Dense small-matrix kernels.

Every kernel is written in the subset of numpy that numba understands, so
the same source runs either compiled (``@njit``) or as plain numpy.  The
compiled path is used when numba is importable and the environment variable
``RELCALC_NUMBA`` is not set to ``0``.

Kernels never see empty arrays: LAPACK wrappers in numba refuse them, so the
public wrappers at the bottom of this module short-circuit zero-size input.
"""

import os

import numpy as np

_FLAG = os.environ.get("RELCALC_NUMBA", "1").strip().lower()

try:
    if _FLAG in ("0", "false", "no", "off"):
        raise ImportError
    from numba import njit

    USE_NUMBA = True
except ImportError:
    USE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


@njit(cache=True)
def _count_above(s, cut):
    r = 0
    for i in range(s.shape[0]):
        if s[i] > cut:
            r += 1
    return r


@njit(cache=True)
def _range_basis(a, rel, scale):
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    smax = s[0] if s.shape[0] > 0 else 0.0
    r = _count_above(s, rel * max(smax, scale))
    return np.ascontiguousarray(u[:, :r])


@njit(cache=True)
def _rank(a, rel, scale):
    _, s, _ = np.linalg.svd(a, full_matrices=False)
    smax = s[0] if s.shape[0] > 0 else 0.0
    return _count_above(s, rel * max(smax, scale))


@njit(cache=True)
def _complement_basis(q, rel):
    # q: n x k, any spanning set; returns an orthonormal basis of its complement
    u, s, _ = np.linalg.svd(q, full_matrices=True)
    smax = s[0] if s.shape[0] > 0 else 0.0
    r = _count_above(s, rel * max(smax, 1.0))
    return np.ascontiguousarray(u[:, r:])


@njit(cache=True)
def _null_space(a, rel, scale):
    _, s, vt = np.linalg.svd(a, full_matrices=True)
    smax = s[0] if s.shape[0] > 0 else 0.0
    r = _count_above(s, rel * max(smax, scale))
    return np.ascontiguousarray(vt[r:, :].T)


@njit(cache=True)
def _pinv(a, rel, scale):
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    smax = s[0] if s.shape[0] > 0 else 0.0
    r = _count_above(s, rel * max(smax, scale))
    out = np.zeros((a.shape[1], a.shape[0]))
    for i in range(r):
        out += np.outer(vt[i, :], u[:, i]) / s[i]
    return out


@njit(cache=True)
def _graph_split(q, h, thr):
    """Split an orthonormal graph basis ``q = [qh; qk]`` into its parts.

    Returns (dom, mul_raw, ran, ker_raw, qh_pinv).  ``mul_raw`` and
    ``ker_raw`` have orthonormal columns up to O(thr).
    """
    qh = np.ascontiguousarray(q[:h, :])
    qk = np.ascontiguousarray(q[h:, :])
    r = q.shape[1]

    uh, sh, vth = np.linalg.svd(qh, full_matrices=True)
    rh = _count_above(sh, thr)
    dom = np.ascontiguousarray(uh[:, :rh])
    mul_raw = qk @ np.ascontiguousarray(vth[rh:, :].T)
    qh_pinv = np.zeros((r, h))
    for i in range(rh):
        qh_pinv += np.outer(vth[i, :], uh[:, i]) / sh[i]

    uk, sk, vtk = np.linalg.svd(qk, full_matrices=True)
    rk = _count_above(sk, thr)
    ran = np.ascontiguousarray(uk[:, :rk])
    ker_raw = qh @ np.ascontiguousarray(vtk[rk:, :].T)
    return dom, mul_raw, ran, ker_raw, qh_pinv


@njit(cache=True)
def _sym_eig(a):
    w, v = np.linalg.eigh(0.5 * (a + a.T))
    return w, v


@njit(cache=True)
def _psd_sqrt(a, rel):
    w, v = np.linalg.eigh(0.5 * (a + a.T))
    wmin = w[0]
    cut = rel * max(abs(w[0]), abs(w[-1]))
    root = np.zeros_like(w)
    for i in range(w.shape[0]):
        if w[i] > cut:
            root[i] = np.sqrt(w[i])
    return (v * root) @ v.T, wmin


@njit(cache=True)
def _proj_dist(q1, q2):
    d = q1 @ q1.T - q2 @ q2.T
    return np.sqrt(np.sum(d * d))


def _c(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def range_basis(a, rel, scale=0.0):
    """Orthonormal basis of the column space; relative cut ``rel * max(smax, scale)``."""
    a = _c(a)
    if a.size == 0:
        return np.zeros((a.shape[0], 0))
    return _range_basis(a, float(rel), float(scale))


def rank(a, rel, scale=0.0):
    a = _c(a)
    if a.size == 0:
        return 0
    return int(_rank(a, float(rel), float(scale)))


def complement_basis(q, rel):
    q = _c(q)
    n = q.shape[0]
    if q.shape[1] == 0 or n == 0:
        return np.eye(n)
    return _complement_basis(q, float(rel))


def null_space(a, rel, scale=0.0):
    a = _c(a)
    m, n = a.shape
    if n == 0:
        return np.zeros((0, 0))
    if m == 0:
        return np.eye(n)
    return _null_space(a, float(rel), float(scale))


def pinv(a, rel, scale=0.0):
    a = _c(a)
    if a.size == 0:
        return np.zeros((a.shape[1], a.shape[0]))
    return _pinv(a, float(rel), float(scale))


def graph_split(q, h, thr):
    q = _c(q)
    n, r = q.shape
    k = n - h
    if r == 0:
        return (np.zeros((h, 0)), np.zeros((k, 0)), np.zeros((k, 0)),
                np.zeros((h, 0)), np.zeros((0, h)))
    if h == 0:
        return (np.zeros((0, 0)), q.copy(), range_basis(q, thr, 1.0),
                np.zeros((0, 0)), np.zeros((r, 0)))
    if k == 0:
        return (range_basis(q, thr, 1.0), np.zeros((0, 0)), np.zeros((0, 0)),
                q.copy(), pinv(q, thr, 1.0))
    return _graph_split(q, int(h), float(thr))


def sym_eig(a):
    a = _c(a)
    if a.size == 0:
        return np.zeros(0), np.zeros((0, 0))
    return _sym_eig(a)


def psd_sqrt(a, rel=0.0):
    """Spectral square root; eigenvalues at or below ``rel * max|w|`` count as zero.

    Also returns the smallest eigenvalue so callers can reject negative input.
    """
    a = _c(a)
    if a.size == 0:
        return np.zeros_like(a), 0.0
    return _psd_sqrt(a, float(rel))


def proj_dist(q1, q2):
    q1, q2 = _c(q1), _c(q2)
    if q1.shape[0] == 0:
        return 0.0
    if q1.shape[1] == 0 and q2.shape[1] == 0:
        return 0.0
    if q1.shape[1] == 0:
        q1 = np.zeros((q1.shape[0], 1))
    if q2.shape[1] == 0:
        q2 = np.zeros((q2.shape[0], 1))
    return float(_proj_dist(q1, q2))
