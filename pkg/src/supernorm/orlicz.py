"""Orlicz functions, Orlicz norms and the hinge-smoothing approximation.

An Orlicz function G is convex, nondecreasing, G(0)=0 and unbounded.  Its
norm is the smallest alpha with sum_i G(x_i/alpha) <= 1.  Three
representations are supported: closed forms (powers, or arbitrary
vectorized callables), sums of hinges max(0, a t - b), and the smoothed
hinge sums used to build twice-differentiable approximations.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .norms import Norm, NormError, UnsupportedKindError, as_vector, dump_real, real, register


class NotOrliczError(NormError):
    """G stays below the requested level over the whole float range."""


class FlatRegionError(NormError):
    """gamma(x) = sum x~ G'(x~) vanished, so the gradient formula breaks down."""


def _inverse(G, level, rtol=1e-15):
    """Smallest s >= 0 with G(s) >= level (bisection on a doubling bracket)."""
    hi = 1.0
    while G.value(hi) < level:
        hi *= 2.0
        if hi > 1e300:
            raise NotOrliczError(f"G never reaches {level}")
    lo = 0.0
    for _ in range(400):
        if hi - lo <= rtol * hi:
            break
        mid = 0.5 * (lo + hi)
        if G.value(mid) < level:
            lo = mid
        else:
            hi = mid
    return hi


class OrliczFunction:
    repr_kind = "abstract"
    twice_differentiable = True

    def __init__(self):
        self._brackets = {}

    def value(self, t):
        """G(t), elementwise."""
        out = self._value(np.asarray(t, dtype=float))
        return float(out) if np.ndim(out) == 0 else out

    __call__ = value

    def d1(self, t):
        return self._d1(np.asarray(t, dtype=float))

    def d2(self, t):
        if not self.twice_differentiable:
            raise UnsupportedKindError(f"{self.repr_kind} is not twice differentiable")
        return self._d2(np.asarray(t, dtype=float))

    def terms(self):
        """(kind, a, b, q) arrays for the compiled kernel, or None."""
        return None

    def brackets(self, n):
        """(s_lo, s_hi) with G(s_lo) = 1/n and G(s_hi) = 1."""
        if n not in self._brackets:
            self._brackets[n] = (_inverse(self, 1.0 / n), _inverse(self, 1.0))
        return self._brackets[n]

    def to_dict(self):
        raise NotImplementedError


class ClosedForm(OrliczFunction):
    """G(t) = coef * t**p, or a user callable triple (not serializable)."""

    repr_kind = "closed_form"

    def __init__(self, p=None, coef=1.0, value=None, d1=None, d2=None, name="custom"):
        super().__init__()
        self.coef = float(coef)
        self.name = name
        if value is None:
            self.p = real(p)
            if not self.p >= 1:
                raise NormError("power Orlicz function needs p >= 1")
            self.family = "power"
            self._f = None
        else:
            self.p = None if p is None else real(p)
            self.family = "custom"
            self._f, self._f1, self._f2 = value, d1, d2
            self.twice_differentiable = d2 is not None

    def _value(self, t):
        if self._f is not None:
            return self._f(t)
        return self.coef * np.where(t > 0, t, 0.0) ** self.p

    def _d1(self, t):
        if self._f is not None:
            return self._f1(t)
        if self.p == 1:
            return np.full_like(t, self.coef)
        return self.coef * self.p * t ** (self.p - 1)

    def _d2(self, t):
        if self._f is not None:
            return self._f2(t)
        if self.p == 1:
            return np.zeros_like(t)
        with np.errstate(divide="ignore"):
            return self.coef * self.p * (self.p - 1) * t ** (self.p - 2)

    def terms(self):
        if self._f is not None:
            return None
        return ([kernels.POWER], [self.coef], [0.0], [self.p])

    def to_dict(self):
        if self._f is not None:
            raise NormError("custom closed-form Orlicz functions cannot be serialized")
        return {"repr": "closed_form", "family": "power", "p": dump_real(self.p), "coef": dump_real(self.coef)}


def power(p, coef=1.0):
    return ClosedForm(p=p, coef=coef)


class HingeSum(OrliczFunction):
    """G(t) = sum_i max(0, a_i t - b_i)."""

    repr_kind = "hinge_sum"
    twice_differentiable = False

    def __init__(self, hinges):
        super().__init__()
        h = np.array([[real(a), real(b)] for a, b in hinges], dtype=float).reshape(-1, 2)
        if (h < 0).any():
            raise NormError("hinge parameters must be nonnegative")
        self.hinges = h
        self.a = h[:, 0]
        self.b = h[:, 1]

    def _value(self, t):
        return np.maximum(np.multiply.outer(t, self.a) - self.b, 0.0).sum(axis=-1)

    def _d1(self, t):
        # right derivative: a hinge counts from its kink onwards
        on = (np.multiply.outer(t, self.a) - self.b >= 0) & (self.a > 0)
        return (on * self.a).sum(axis=-1)

    def terms(self):
        m = len(self.a)
        return ([kernels.HINGE] * m, self.a, self.b, [1.0] * m)

    def to_dict(self):
        return {"repr": "hinge_sum", "hinges": [[dump_real(a), dump_real(b)] for a, b in self.hinges]}


class SmoothedSum(OrliczFunction):
    """Sum of class-H power terms and class-L soft hinges (see smooth_hinges)."""

    repr_kind = "smoothed_sum"

    def __init__(self, records, p):
        super().__init__()
        self.p = real(p)
        self.records = [dict(r) for r in records]
        kind, a, b, q = [], [], [], []
        for r in self.records:
            if r["class"] == "H":
                kind.append(kernels.POWER)
                a.append(real(r["coef"]))
                b.append(0.0)
                q.append(real(r["p"]))
            elif r["class"] == "L":
                kind.append(kernels.SOFT)
                a.append(real(r["a"]))
                b.append(real(r["b"]))
                q.append(real(r["p"]))
            else:
                raise NormError(f"unknown smoothed term class {r['class']!r}")
        self._kind = np.array(kind, dtype=np.int64)
        self._a, self._b, self._q = (np.array(v, dtype=float) for v in (a, b, q))

    def terms(self):
        return (self._kind, self._a, self._b, self._q)

    def _value(self, t):
        return kernels.term_sum_numpy(t, *self.terms())

    def _soft(self, t):
        """Per-term (a, u/r, q) for the L terms, broadcast against t."""
        L = self._kind == kernels.SOFT
        a, b, q = self._a[L], self._b[L], self._q[L]
        u = np.multiply.outer(t, a)
        with np.errstate(divide="ignore", invalid="ignore"):
            big = np.maximum(u, b)
            small = np.minimum(u, b)
            r = big * (1.0 + (small / np.where(big > 0, big, 1.0)) ** q) ** (1.0 / q)
            ratio = np.where(r > 0, u / np.where(r > 0, r, 1.0), 0.0)
        return a, b, q, ratio

    def _d1(self, t):
        H = self._kind == kernels.POWER
        c, qh = self._a[H], self._q[H]
        out = (c * qh * np.power.outer(t, qh - 1)).sum(axis=-1)
        a, b, q, ratio = self._soft(t)
        return out + (a * ratio ** (q - 1)).sum(axis=-1)

    def _d2(self, t):
        H = self._kind == kernels.POWER
        c, qh = self._a[H], self._q[H]
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (c * qh * (qh - 1) * np.power.outer(t, qh - 2)).sum(axis=-1)
            a, b, q, ratio = self._soft(t)
            tt = np.asarray(t, dtype=float)[..., None]
            pos = (q - 1) * (a / tt) * (ratio ** (q - 1) - ratio ** (2 * q - 1))
            at_zero = np.where(b > 0, (q - 1) * a**q * 0.0 ** (q - 2) / np.where(b > 0, b, 1.0) ** (q - 1), 0.0)
            soft = np.where(tt > 0, pos, at_zero)
        return out + soft.sum(axis=-1)

    def to_dict(self):
        recs = []
        for r in self.records:
            recs.append({k: (v if k == "class" else dump_real(v)) for k, v in r.items()})
        return {"repr": "smoothed_sum", "p": dump_real(self.p), "terms": recs}


def function_from_dict(d):
    rk = d.get("repr")
    if rk == "closed_form":
        if d.get("family", "power") != "power":
            raise NormError("only the power family is serializable")
        return ClosedForm(p=d["p"], coef=d.get("coef", 1.0))
    if rk == "hinge_sum":
        return HingeSum(d["hinges"])
    if rk == "smoothed_sum":
        return SmoothedSum(d["terms"], d["p"])
    raise NormError(f"unknown Orlicz representation {rk!r}")


# ------------------------------------------------------------------ the norm

def orlicz_eval_rows(G, X, tol=1e-10, maxit=200):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    s_lo, s_hi = G.brackets(X.shape[1])
    terms = G.terms()
    if terms is not None:
        return kernels.orlicz_rows(X, *terms, s_lo, s_hi, tol, maxit)
    has_d1 = not (isinstance(G, ClosedForm) and G._f is not None and G._f1 is None)
    return kernels.bisect_rows_numpy(X, G._value, s_lo, s_hi, tol, maxit, G._d1 if has_d1 else None)


def orlicz_eval(G, x, tol=1e-10):
    x = as_vector(x)
    return float(orlicz_eval_rows(G, x[None, :], tol)[0])


def orlicz_grad(G, x, tol=1e-10):
    x = as_vector(x)
    if not x.any():
        raise NormError("gradient is undefined at the origin")
    return _grad_rows(G, x[None, :], tol)[0]


def _grad_rows(G, X, tol):
    alpha = orlicz_eval_rows(G, X, tol)
    Xt = X / alpha[:, None]
    g = G.d1(Xt)
    gamma = (Xt * g).sum(axis=1)
    if (gamma <= 0).any():
        raise FlatRegionError("all coordinates sit in the flat part of G; gamma(x) = 0")
    return g / gamma[:, None]


@register("orlicz")
class OrliczNorm(Norm):
    analytic_grad = True

    def __init__(self, G, dim, supermod_p=None, tol=1e-10, meta=None):
        if supermod_p is None and isinstance(G, ClosedForm) and G.family == "power":
            supermod_p = G.p
        super().__init__(dim, supermod_p)
        self.G = G
        self.tol = float(tol)
        self.meta = dict(meta or {})

    def _values(self, X):
        return orlicz_eval_rows(self.G, X, self.tol)

    def _grads(self, X):
        return _grad_rows(self.G, X, self.tol)

    def params(self):
        d = {"G": self.G.to_dict(), "tol": self.tol}
        if self.supermod_p is not None:
            d["supermod_p"] = dump_real(self.supermod_p)
        if self.meta:
            d["meta"] = self.meta
        return d

    @classmethod
    def from_params(cls, dim, params):
        sp = params.get("supermod_p")
        return cls(function_from_dict(params["G"]), dim, None if sp is None else real(sp),
                   params.get("tol", 1e-10), params.get("meta"))


# --------------------------------------------------------- growth condition

@dataclass
class GrowthCertificate:
    p: float
    grid: np.ndarray
    max_ratio: float
    passed: bool
    label: str = "sampled"

    def to_dict(self):
        return {"p": self.p, "grid_size": int(len(self.grid)), "t_lo": float(self.grid[0]),
                "t_hi": float(self.grid[-1]), "max_ratio": self.max_ratio,
                "passed": self.passed, "label": self.label}


def growth_check(G, p, t_lo=1e-3, t_hi=1e3, grid_size=400):
    """Scan 1 + t G''(t)/G'(t) on a log grid; passing means ratio <= p."""
    if not G.twice_differentiable:
        raise UnsupportedKindError(f"growth_check needs a twice differentiable G, got {G.repr_kind}")
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    grid = np.geomspace(t_lo, t_hi, int(grid_size))
    g1 = np.asarray(G.d1(grid), dtype=float)
    g2 = np.asarray(G.d2(grid), dtype=float)
    live = g1 > 0
    ratios = 1.0 + grid[live] * g2[live] / g1[live]
    worst = float(ratios.max()) if ratios.size else 1.0
    return GrowthCertificate(float(p), grid, worst, worst <= p + 1e-8)


# ------------------------------------------------------- approximation steps

def piecewise_approx(G, n):
    """Hinge sum matching G at the points where G = i/n, i = 0..n."""
    n = int(n)
    if n < 1:
        raise ValueError("n must be positive")
    t = np.zeros(n + 1)
    for i in range(1, n + 1):
        t[i] = _inverse(G, i / n)
    hinges = []
    slope = 0.0
    for i in range(1, n + 1):
        width = t[i] - t[i - 1]
        a = max(1.0 / (n * width) - slope, 0.0) if width > 0 else 0.0
        hinges.append((a, a * t[i - 1]))
        slope += a
    out = HingeSum(hinges)
    out.knots = t
    return out


def min_smoothing_exponent(n_hinges):
    return 2.0 * math.log(n_hinges) + 1.0


def smooth_hinges(Gt, p):
    """Replace hinges with b >= 1 by power terms and the rest by soft hinges."""
    m = len(Gt.a)
    p = real(p)
    need = min_smoothing_exponent(m)
    if p < need - 1e-12:
        raise ValueError(f"smoothing exponent {p} is below the required minimum {need:.6g} for {m} hinges")
    recs = []
    for a, b in zip(Gt.a, Gt.b):
        if a == 0.0:
            continue
        if b >= 1.0:
            recs.append({"class": "H", "coef": 2.0 * (2.0 * a / (b + 1.0)) ** p, "p": p})
        else:
            recs.append({"class": "L", "a": float(a), "b": float(b), "p": p})
    return SmoothedSum(recs, p)


def pipeline_exponent(n):
    return math.ceil(2.0 * math.log(n)) + 1.0


@dataclass
class OrliczPipeline:
    G: OrliczFunction
    n: int
    p: float
    hinge: HingeSum
    smoothed: SmoothedSum
    norms: dict = field(default_factory=dict)


def orlicz_pipeline(G, n, p=None):
    n = int(n)
    if n < 2:
        raise ValueError("the approximation pipeline needs n >= 2")
    p = pipeline_exponent(n) if p is None else real(p)
    Gt = piecewise_approx(G, n)
    F = smooth_hinges(Gt, p)
    meta = {"source": G.to_dict() if G.repr_kind != "closed_form" or G.family == "power" else "custom",
            "p": dump_real(p), "distortion_bound": 24}
    norms = {
        "G": OrliczNorm(G, n),
        "hinge": OrliczNorm(Gt, n),
        "F": OrliczNorm(F, n, supermod_p=2 * p - 1, meta=meta),
    }
    return OrliczPipeline(G, n, p, Gt, F, norms)


def approximate_orlicz_norm(G, n, p=None):
    """A (2p-1)-supermodular, twice differentiable norm within factor 24 of ||.||_G."""
    return orlicz_pipeline(G, n, p).norms["F"]


def topk_orlicz(k):
    """max(0, t - 1/k): its Orlicz norm lies in [topk/2, topk]."""
    k = int(k)
    if k < 1:
        raise ValueError("k must be positive")
    return HingeSum([(1.0, 1.0 / k)])
