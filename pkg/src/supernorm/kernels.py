"""Hot loops with a numba path and a plain numpy path.

Three places dominate runtime: the Orlicz bisection (many rows, many
iterations), brute-force enumeration of job assignments, and Monte Carlo
simulation of adaptively chosen paths.  Each has an ``@njit`` kernel and a
vectorized numpy twin.  Which one runs is decided at call time:

* ``SUPERNORM_DISABLE_JIT=1`` in the environment selects numpy at import;
* ``enable_jit()`` / ``disable_jit()`` flip it at runtime (tests, benchmarks).

Both paths implement the same arithmetic, so results agree to rounding.
"""
import math
import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return lambda f: f


_ENABLED = HAVE_NUMBA and os.environ.get("SUPERNORM_DISABLE_JIT", "").lower() not in ("1", "true", "yes")

# term codes shared by Orlicz functions that can be lowered to arrays
POWER = 0  # a * t**q
HINGE = 1  # max(0, a t - b)
SOFT = 2   # (b**q + (a t)**q)**(1/q) - b


def jit_enabled():
    return _ENABLED


def enable_jit():
    global _ENABLED
    if not HAVE_NUMBA:
        raise RuntimeError("numba is not importable")
    _ENABLED = True


def disable_jit():
    global _ENABLED
    _ENABLED = False


# ---------------------------------------------------------------- Orlicz sums

@njit(cache=True)
def _term_sum_nb(t, kind, a, b, q):
    s = 0.0
    for j in range(kind.shape[0]):
        k = kind[j]
        if k == 0:
            if t > 0.0:
                s += a[j] * t ** q[j]
        elif k == 1:
            u = a[j] * t - b[j]
            if u > 0.0:
                s += u
        else:
            u = a[j] * t
            if u <= 0.0:
                continue
            bb = b[j]
            if bb <= 0.0:
                s += u
            elif u < bb:
                s += bb * math.expm1(math.log1p((u / bb) ** q[j]) / q[j])
            else:
                s += u * (1.0 + (bb / u) ** q[j]) ** (1.0 / q[j]) - bb
    return s


@njit(cache=True)
def _term_d1_nb(t, kind, a, b, q):
    s = 0.0
    for j in range(kind.shape[0]):
        k = kind[j]
        if k == 0:
            if q[j] == 1.0:
                s += a[j]
            elif t > 0.0:
                s += a[j] * q[j] * t ** (q[j] - 1.0)
        elif k == 1:
            if a[j] > 0.0 and a[j] * t - b[j] >= 0.0:
                s += a[j]
        else:
            u = a[j] * t
            if u <= 0.0:
                continue
            bb = b[j]
            if bb <= 0.0:
                s += a[j]
            elif u < bb:
                s += a[j] * (1.0 + (bb / u) ** q[j]) ** (1.0 / q[j] - 1.0)
            else:
                s += a[j] * (1.0 + (bb / u) ** q[j]) ** (1.0 / q[j] - 1.0)
    return s


@njit(cache=True)
def _phi_nb(x, alpha, kind, a, b, q):
    s = 0.0
    for i in range(x.shape[0]):
        if x[i] > 0.0:
            s += _term_sum_nb(x[i] / alpha, kind, a, b, q)
    return s


@njit(cache=True)
def _term_both_nb(t, kind, a, b, q):
    """G(t) and G'(t) together; soft hinges share their transcendentals."""
    s = 0.0
    d = 0.0
    for j in range(kind.shape[0]):
        k = kind[j]
        if k == 0:
            if t > 0.0:
                s += a[j] * t ** q[j]
                d += a[j] * q[j] * t ** (q[j] - 1.0)
            elif q[j] == 1.0:
                d += a[j]
        elif k == 1:
            u = a[j] * t - b[j]
            if u > 0.0:
                s += u
            if a[j] > 0.0 and u >= 0.0:
                d += a[j]
        else:
            u = a[j] * t
            if u <= 0.0:
                continue
            bb = b[j]
            if bb <= 0.0:
                s += u
                d += a[j]
                continue
            iq = 1.0 / q[j]
            lr = q[j] * math.log(u / bb)
            if lr < -60.0:
                continue  # below 1e-26 * b: invisible next to the unit level
            if lr < 0.0:
                big = math.log1p(math.exp(lr))
                s += bb * math.expm1(big * iq)
                m = big - lr
            else:
                m = math.log1p(math.exp(-lr))
                s += u * math.exp(m * iq) - bb
            d += a[j] * math.exp((iq - 1.0) * m)
    return s, d


@njit(cache=True)
def _phi_d_nb(x, alpha, kind, a, b, q):
    s = 0.0
    ds = 0.0
    for i in range(x.shape[0]):
        if x[i] > 0.0:
            t = x[i] / alpha
            g, g1 = _term_both_nb(t, kind, a, b, q)
            s += g
            ds += t * g1
    return s, -ds / alpha


@njit(cache=True)
def _orlicz_rows_nb(X, kind, a, b, q, s_lo, s_hi, tol, maxit):
    m, n = X.shape
    out = np.zeros(m)
    for r in range(m):
        x = X[r]
        mx = 0.0
        sm = 0.0
        for i in range(n):
            sm += x[i]
            if x[i] > mx:
                mx = x[i]
        if mx == 0.0:
            continue
        lo = mx / s_hi
        hi = sm / s_lo
        k = 0
        while _phi_nb(x, lo, kind, a, b, q) < 1.0 and k < 2000:
            lo *= 0.5
            k += 1
        k = 0
        while _phi_nb(x, hi, kind, a, b, q) > 1.0 and k < 2000:
            hi *= 2.0
            k += 1
        f_lo, d_lo = _phi_d_nb(x, lo, kind, a, b, q)
        for it in range(maxit):
            if hi - lo <= tol * hi:
                break
            cand = 0.5 * (lo + hi)
            if d_lo < 0.0:
                t = lo - (f_lo - 1.0) / d_lo
                if t - lo <= 0.125 * tol * t:
                    t *= 1.0 + 0.25 * tol
                if lo < t < hi:
                    cand = t
            f, d = _phi_d_nb(x, cand, kind, a, b, q)
            if f > 1.0:
                lo = cand
                f_lo = f
                d_lo = d
            else:
                hi = cand
        out[r] = hi
    return out


def term_sum_numpy(t, kind, a, b, q):
    """Vectorized G(t) for term arrays; ``t`` may have any shape."""
    t = np.asarray(t, dtype=float)
    s = np.zeros_like(t)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for j in range(len(kind)):
            if kind[j] == POWER:
                s += a[j] * np.where(t > 0, t, 0.0) ** q[j]
            elif kind[j] == HINGE:
                s += np.maximum(a[j] * t - b[j], 0.0)
            else:
                u = a[j] * t
                bb = b[j]
                if bb <= 0.0:
                    s += np.maximum(u, 0.0)
                    continue
                small = bb * np.expm1(np.log1p((u / bb) ** q[j]) / q[j])
                large = u * (1.0 + (bb / u) ** q[j]) ** (1.0 / q[j]) - bb
                s += np.where(u <= 0, 0.0, np.where(u < bb, small, large))
    return s


def term_d1_numpy(t, kind, a, b, q):
    """Vectorized right derivative G'(t) for term arrays."""
    t = np.asarray(t, dtype=float)
    s = np.zeros_like(t)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for j in range(len(kind)):
            if kind[j] == POWER:
                if q[j] == 1.0:
                    s += a[j]
                else:
                    s += a[j] * q[j] * np.where(t > 0, t, 0.0) ** (q[j] - 1.0)
            elif kind[j] == HINGE:
                if a[j] > 0:
                    s += np.where(a[j] * t - b[j] >= 0, a[j], 0.0)
            else:
                u = a[j] * t
                bb = b[j]
                if bb <= 0.0:
                    s += np.where(u > 0, a[j], 0.0)
                    continue
                s += np.where(u > 0, a[j] * (1.0 + (bb / u) ** q[j]) ** (1.0 / q[j] - 1.0), 0.0)
    return s


def bisect_rows_numpy(X, gfun, s_lo, s_hi, tol, maxit, dfun=None):
    """Vectorized bracketed solve of inf{alpha : sum_i G(x_i/alpha) <= 1} per row.

    ``gfun`` (and optionally its derivative ``dfun``) map arrays elementwise.
    With ``dfun`` the solver takes Newton steps from the lower end of the
    bracket.  The sum is convex and decreasing in alpha, so those steps never
    pass the root; a final probe just beyond it closes the bracket.  Steps
    that leave the bracket fall back to bisection.  Converged rows are frozen
    so iterates match the scalar kernel.
    """
    X = np.asarray(X, dtype=float)
    out = np.zeros(X.shape[0])
    mx = X.max(axis=1) if X.shape[1] else np.zeros(X.shape[0])
    nz = mx > 0
    if not nz.any():
        return out
    Xn = X[nz]
    lo = mx[nz] / s_hi
    hi = Xn.sum(axis=1) / s_lo

    def phi(alpha):
        return gfun(Xn / alpha[:, None]).sum(axis=1)

    def phi_d(alpha):
        T = Xn / alpha[:, None]
        return gfun(T).sum(axis=1), -(T * dfun(T)).sum(axis=1) / alpha

    for _ in range(2000):
        bad = phi(lo) < 1.0
        if not bad.any():
            break
        lo = np.where(bad, 0.5 * lo, lo)
    for _ in range(2000):
        bad = phi(hi) > 1.0
        if not bad.any():
            break
        hi = np.where(bad, 2.0 * hi, hi)
    if dfun is not None:
        f_lo, d_lo = phi_d(lo)
    for it in range(maxit):
        active = hi - lo > tol * hi
        if not active.any():
            break
        cand = 0.5 * (lo + hi)
        if dfun is not None:
            with np.errstate(divide="ignore", invalid="ignore"):
                t = lo - (f_lo - 1.0) / d_lo
            t = np.where(t - lo <= 0.125 * tol * t, t * (1.0 + 0.25 * tol), t)
            ok = (d_lo < 0) & (lo < t) & (t < hi)
            cand = np.where(ok, t, cand)
        if dfun is not None:
            f, d = phi_d(cand)
        else:
            f = phi(cand)
        big = f > 1.0
        up = active & big
        lo = np.where(up, cand, lo)
        hi = np.where(active & ~big, cand, hi)
        if dfun is not None:
            f_lo = np.where(up, f, f_lo)
            d_lo = np.where(up, d, d_lo)
    out[nz] = hi
    return out


def orlicz_rows(X, kind, a, b, q, s_lo, s_hi, tol=1e-10, maxit=200):
    """Orlicz norm of every row of ``X`` for a G given as term arrays."""
    X = np.ascontiguousarray(X, dtype=float)
    kind = np.asarray(kind, dtype=np.int64)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    q = np.asarray(q, dtype=float)
    if _ENABLED:
        return _orlicz_rows_nb(X, kind, a, b, q, float(s_lo), float(s_hi), float(tol), int(maxit))
    return bisect_rows_numpy(X, lambda t: term_sum_numpy(t, kind, a, b, q), s_lo, s_hi, tol, maxit,
                             lambda t: term_d1_numpy(t, kind, a, b, q))


# ------------------------------------------------------ assignment enumeration

@njit(cache=True)
def _enum_loads_nb(sizes, start, count):
    T, n = sizes.shape
    out = np.zeros((count, n))
    for c in range(count):
        code = start + c
        for t in range(T):
            m = code % n
            code //= n
            out[c, m] += sizes[t, m]
    return out


def _enum_loads_numpy(sizes, start, count):
    T, n = sizes.shape
    codes = np.arange(start, start + count, dtype=np.int64)
    out = np.zeros((count, n))
    rows = np.arange(count)
    for t in range(T):
        m = codes % n
        codes = codes // n
        np.add.at(out, (rows, m), sizes[t, m])
    return out


def enumerate_loads(sizes, start=0, count=None):
    """Load vectors of assignments ``start .. start+count-1``.

    Assignment code c puts job t on machine ``(c // n**t) % n``.
    """
    sizes = np.ascontiguousarray(sizes, dtype=float)
    T, n = sizes.shape
    total = n ** T
    if count is None:
        count = total - start
    if _ENABLED:
        return _enum_loads_nb(sizes, int(start), int(count))
    return _enum_loads_numpy(sizes, int(start), int(count))


# ------------------------------------------------ adversarial tangent paths

@njit(cache=True)
def _argmax_paths_nb(xi, xibar, n):
    P, T = xi.shape
    S = np.zeros((P, n))
    Sb = np.zeros((P, n))
    for r in range(P):
        for t in range(T):
            best = 0
            for i in range(1, n):
                if S[r, i] > S[r, best]:
                    best = i
            S[r, best] += xi[r, t]
            Sb[r, best] += xibar[r, t]
    return S, Sb


def _argmax_paths_numpy(xi, xibar, n):
    P, T = xi.shape
    S = np.zeros((P, n))
    Sb = np.zeros((P, n))
    rows = np.arange(P)
    for t in range(T):
        best = S.argmax(axis=1)
        S[rows, best] += xi[:, t]
        Sb[rows, best] += xibar[:, t]
    return S, Sb


def argmax_paths(xi, xibar, n):
    """Final sums of the running-argmax tangent pair.

    At step t both sequences load coordinate argmax(S_{t-1}) (lowest index on
    ties); the real sum receives ``xi[:, t]``, the decoupled one ``xibar[:, t]``.
    """
    xi = np.ascontiguousarray(xi, dtype=float)
    xibar = np.ascontiguousarray(xibar, dtype=float)
    if _ENABLED:
        return _argmax_paths_nb(xi, xibar, int(n))
    return _argmax_paths_numpy(xi, xibar, int(n))
