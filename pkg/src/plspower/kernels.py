"""Batched PLS1 refits and class statistics for the permutation engine.

For a single response column the deflated cross-product ``E_{a-1}^T f`` equals
``X^T (y - yhat_{a-1})``, so each refit needs only N-vectors: the score
``t_a`` is ``X w_a`` orthogonalized against earlier scores and the fit is the
projection of y onto them.  This gives the same fitted values as the
explicit double-deflation loop in :mod:`plspower.pls` at O(A N P) cost
without copying X.

Two interchangeable backends compute the same statistics:

* ``numba``: ``@njit`` loops over responses (default when numba imports);
* ``numpy``: the same recurrences vectorized across responses.

``PLSPOWER_NUMBA=0`` in the environment forces the numpy path.
"""

import os

import numpy as np

COLLAPSE_TOL = 1e-12
DEGENERATE_TOL = 1e-12

STAT_KINDS = ("mcc", "score", "r2")

try:  # pragma: no cover - exercised implicitly when numba is present
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False


def _env_backend():
    flag = os.environ.get("PLSPOWER_NUMBA", "1").strip().lower()
    if flag in ("0", "false", "no", "off") or not HAVE_NUMBA:
        return "numpy"
    return "numba"


_backend = _env_backend()


def get_backend():
    return _backend


def set_backend(name):
    """Switch backend at runtime ('numba' or 'numpy'); returns the previous one."""
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    prev, _backend = _backend, name
    return prev


# ---------------------------------------------------------------- scalar helpers


def pooled_t(scores, labels):
    """|t| of the pooled-variance two-sample t-test between classes 1 and 2.

    Zero pooled variance gives +inf when the class means differ and 0 when
    they do not.
    """
    s = np.asarray(scores, dtype=float).ravel()
    labels = np.asarray(labels).ravel()
    a, b = s[labels == 1], s[labels == 2]
    n1, n2 = a.size, b.size
    diff = a.mean() - b.mean()
    ss = np.sum((a - a.mean()) ** 2) + np.sum((b - b.mean()) ** 2)
    sp2 = ss / (n1 + n2 - 2)
    scale = np.abs(s).max()
    if sp2 <= (DEGENERATE_TOL * scale) ** 2:
        return np.inf if abs(diff) > DEGENERATE_TOL * scale else 0.0
    return abs(diff) / np.sqrt(sp2 * (1.0 / n1 + 1.0 / n2))


def pearson_r2(y, yhat):
    """Squared Pearson correlation; 0 when either vector is constant."""
    y = np.asarray(y, dtype=float).ravel()
    yhat = np.asarray(yhat, dtype=float).ravel()
    yc = y - y.mean()
    hc = yhat - yhat.mean()
    syy = yc @ yc
    shh = hc @ hc
    if shh <= (DEGENERATE_TOL * np.abs(yhat).max()) ** 2 * yhat.size or syy == 0.0:
        return 0.0
    return float(min((yc @ hc) ** 2 / (syy * shh), 1.0))


# ---------------------------------------------------------------- numpy backend


def _stats_numpy(X, F, L, A, threshold):
    J, N = F.shape
    xnorm2 = np.sum(X * X)
    ynorm2 = np.sum(F * F, axis=1)
    T = np.zeros((A, J, N))
    tt = np.ones((A, J))
    yhat = np.zeros((J, N))
    collapsed = np.zeros(J, dtype=bool)
    lam1 = np.zeros(J)
    for a in range(A):
        V = (F - yhat) @ X
        lam = np.sum(V * V, axis=1)
        if a == 0:
            lam1 = lam
            collapsed |= lam <= COLLAPSE_TOL * xnorm2 * ynorm2
        else:
            collapsed |= lam <= COLLAPSE_TOL * lam1
        norm = np.sqrt(np.where(collapsed, 1.0, lam))
        U = (V @ X.T) / norm[:, None]
        for _ in range(2):
            for b in range(a):
                c = np.sum(T[b] * U, axis=1) / tt[b]
                U = U - c[:, None] * T[b]
        T[a] = U
        uu = np.sum(U * U, axis=1)
        collapsed |= uu == 0.0
        tt[a] = np.where(uu == 0.0, 1.0, uu)
        c = np.sum(U * F, axis=1) / tt[a]
        yhat = yhat + c[:, None] * U

    out = np.empty((J, 3))
    # MCC: class 1 is predicted at or above the threshold
    pred1 = yhat >= threshold
    true1 = L == 1
    tp = np.sum(pred1 & true1, axis=1).astype(float)
    fp = np.sum(pred1 & ~true1, axis=1).astype(float)
    fn = np.sum(~pred1 & true1, axis=1).astype(float)
    tn = np.sum(~pred1 & ~true1, axis=1).astype(float)
    den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    safe = np.where(den == 0.0, 1.0, den)
    out[:, 0] = np.where(den == 0.0, 0.0, (tp * tn - fp * fn) / np.sqrt(safe))

    # pooled t
    n1 = np.sum(true1, axis=1).astype(float)
    n2 = N - n1
    m1 = np.sum(np.where(true1, yhat, 0.0), axis=1) / n1
    m2 = np.sum(np.where(true1, 0.0, yhat), axis=1) / n2
    centered = yhat - np.where(true1, m1[:, None], m2[:, None])
    sp2 = np.sum(centered * centered, axis=1) / (N - 2)
    diff = np.abs(m1 - m2)
    scale = np.abs(yhat).max(axis=1)
    degenerate = sp2 <= (DEGENERATE_TOL * scale) ** 2
    tval = diff / np.sqrt(np.where(degenerate, 1.0, sp2) * (1.0 / n1 + 1.0 / n2))
    out[:, 1] = np.where(
        degenerate, np.where(diff > DEGENERATE_TOL * scale, np.inf, 0.0), tval
    )

    # R^2
    yc = F - F.mean(axis=1, keepdims=True)
    hc = yhat - yhat.mean(axis=1, keepdims=True)
    syy = np.sum(yc * yc, axis=1)
    shh = np.sum(hc * hc, axis=1)
    flat = (shh <= (DEGENERATE_TOL * scale) ** 2 * N) | (syy == 0.0)
    sxy = np.sum(yc * hc, axis=1)
    out[:, 2] = np.where(flat, 0.0, np.minimum(sxy * sxy / np.where(flat, 1.0, syy * shh), 1.0))

    out[collapsed] = 0.0
    return out, collapsed


# ---------------------------------------------------------------- numba backend

if HAVE_NUMBA:

    @njit(nogil=True, cache=True)
    def _stats_numba_impl(X, F, L, A, threshold, out, collapsed):  # pragma: no cover
        J, N = F.shape
        P = X.shape[1]
        xnorm2 = 0.0
        for n in range(N):
            for p in range(P):
                xnorm2 += X[n, p] * X[n, p]
        Xt = np.ascontiguousarray(X.T)
        T = np.empty((A, N))
        tt = np.empty(A)
        yhat = np.empty(N)
        r = np.empty(N)
        v = np.empty(P)
        u = np.empty(N)
        for j in range(J):
            y = F[j]
            ynorm2 = 0.0
            for n in range(N):
                yhat[n] = 0.0
                ynorm2 += y[n] * y[n]
            lam1 = 0.0
            bad = False
            for a in range(A):
                for n in range(N):
                    r[n] = y[n] - yhat[n]
                v[:] = np.dot(Xt, r)
                lam = 0.0
                for p in range(P):
                    lam += v[p] * v[p]
                if a == 0:
                    lam1 = lam
                    if lam <= COLLAPSE_TOL * xnorm2 * ynorm2:
                        bad = True
                        break
                elif lam <= COLLAPSE_TOL * lam1:
                    bad = True
                    break
                norm = np.sqrt(lam)
                u[:] = np.dot(X, v) / norm
                for _ in range(2):
                    for b in range(a):
                        c = 0.0
                        for n in range(N):
                            c += T[b, n] * u[n]
                        c /= tt[b]
                        for n in range(N):
                            u[n] -= c * T[b, n]
                uu = 0.0
                uy = 0.0
                for n in range(N):
                    uu += u[n] * u[n]
                    uy += u[n] * y[n]
                if uu == 0.0:
                    bad = True
                    break
                tt[a] = uu
                c = uy / uu
                for n in range(N):
                    T[a, n] = u[n]
                    yhat[n] += c * u[n]
            collapsed[j] = bad
            if bad:
                out[j, 0] = 0.0
                out[j, 1] = 0.0
                out[j, 2] = 0.0
                continue

            tp = 0.0
            fp = 0.0
            fn = 0.0
            tn = 0.0
            n1 = 0.0
            s1 = 0.0
            s2 = 0.0
            ysum = 0.0
            hsum = 0.0
            scale = 0.0
            for n in range(N):
                h = yhat[n]
                if abs(h) > scale:
                    scale = abs(h)
                ysum += y[n]
                hsum += h
                if L[j, n] == 1:
                    n1 += 1.0
                    s1 += h
                    if h >= threshold:
                        tp += 1.0
                    else:
                        fn += 1.0
                else:
                    s2 += h
                    if h >= threshold:
                        fp += 1.0
                    else:
                        tn += 1.0
            den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
            if den == 0.0:
                out[j, 0] = 0.0
            else:
                out[j, 0] = (tp * tn - fp * fn) / np.sqrt(den)

            n2 = N - n1
            m1 = s1 / n1
            m2 = s2 / n2
            ss = 0.0
            for n in range(N):
                if L[j, n] == 1:
                    d = yhat[n] - m1
                else:
                    d = yhat[n] - m2
                ss += d * d
            sp2 = ss / (N - 2)
            diff = abs(m1 - m2)
            if sp2 <= (DEGENERATE_TOL * scale) ** 2:
                if diff > DEGENERATE_TOL * scale:
                    out[j, 1] = np.inf
                else:
                    out[j, 1] = 0.0
            else:
                out[j, 1] = diff / np.sqrt(sp2 * (1.0 / n1 + 1.0 / n2))

            ym = ysum / N
            hm = hsum / N
            syy = 0.0
            shh = 0.0
            sxy = 0.0
            for n in range(N):
                dy = y[n] - ym
                dh = yhat[n] - hm
                syy += dy * dy
                shh += dh * dh
                sxy += dy * dh
            if shh <= (DEGENERATE_TOL * scale) ** 2 * N or syy == 0.0:
                out[j, 2] = 0.0
            else:
                out[j, 2] = min(sxy * sxy / (syy * shh), 1.0)


def _stats_numba(X, F, L, A, threshold):
    J = F.shape[0]
    out = np.empty((J, 3))
    collapsed = np.zeros(J, dtype=np.bool_)
    _stats_numba_impl(X, F, L, A, float(threshold), out, collapsed)
    return out, collapsed


# ---------------------------------------------------------------- dispatch


def class_stats(X, F, L, A, threshold, backend=None):
    """MCC, |t| and R^2 of A-component PLS1 fits for each response row.

    Parameters
    ----------
    X : (N, P) centered covariates, shared by every fit.
    F : (J, N) responses, one ilr-coded (permuted) class vector per row.
    L : (J, N) labels in {1, 2} matching the rows of `F`.
    A : number of components.
    threshold : fitted values at or above it are predicted as class 1.

    Returns
    -------
    stats : (J, 3) array with columns ``STAT_KINDS``; collapsed fits are 0.
    collapsed : (J,) bool, True where the covariance signal ran out before A.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    F = np.ascontiguousarray(np.atleast_2d(F), dtype=np.float64)
    L = np.ascontiguousarray(np.atleast_2d(L), dtype=np.int64)
    backend = backend or _backend
    if backend == "numba":
        return _stats_numba(X, F, L, int(A), threshold)
    return _stats_numpy(X, F, L, int(A), threshold)
