"""Symmetric norms: Top-k decompositions and supermodular approximations."""
import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import sampling
from .norms import LpCombine, Norm, NormError, as_vector, dump_real, from_dict, real, register
from .orlicz import OrliczNorm, orlicz_pipeline, pipeline_exponent, topk_orlicz


class NotSymmetricError(NormError):
    pass


def is_symmetric(norm, trials=20, seed=0, tol=1e-9):
    rng = np.random.default_rng(seed)
    X = sampling.mixed(rng, trials, norm.dim)
    base = norm.values(X)
    perm = np.array([rng.permutation(norm.dim) for _ in range(trials)])
    shuffled = np.take_along_axis(X, perm, axis=1)
    return bool(np.all(np.abs(norm.values(shuffled) - base) <= tol * np.maximum(base, 1.0)))


def pow2_ceil(n):
    return 1 << max(0, int(n - 1).bit_length())


def _top_sums(X, sizes):
    """Column j holds the sum of the sizes[j] largest entries of each row."""
    S = np.cumsum(-np.sort(-X, axis=1), axis=1)
    idx = np.minimum(np.asarray(sizes), X.shape[1]) - 1
    return S[:, idx]


@dataclass
class TopkDecomposition:
    """max_j c_j * top_{2^j}(x), j = 0..log2 n, rescaled by log2(n) + 1.

    The unscaled maximum never exceeds the source norm; the rescaled one
    never falls below it (each dyadic block of the sorted vector costs at
    most one c_j top term).
    """

    n: int
    scalars: np.ndarray
    source: Norm = None

    @property
    def levels(self):
        return 1 << np.arange(len(self.scalars))

    @property
    def scale(self):
        return math.log2(self.n) + 1.0

    def max_form(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return (_top_sums(X, self.levels) * self.scalars).max(axis=1)

    def values(self, X):
        return self.scale * self.max_form(X)

    def value(self, x):
        return float(self.values(as_vector(x)[None, :])[0])

    def to_dict(self):
        return {"n": self.n, "scalars": [float(c) for c in self.scalars]}


def topk_decompose(norm, n=None, check=True):
    if check and not is_symmetric(norm):
        raise NotSymmetricError("norm failed the permutation test")
    n = pow2_ceil(norm.dim if n is None else n)
    c = []
    for j in range(int(math.log2(n)) + 1):
        k = 1 << j
        ones = np.zeros(norm.dim)
        ones[:min(k, norm.dim)] = 1.0
        c.append(norm.value(ones) / k)
    return TopkDecomposition(n, np.array(c), norm)


@register("budget_symmetric")
class BudgetSymmetricNorm(Norm):
    """Gauge of {x : every 2^j coordinates sum to at most c^j}.

    Equivalently max_j top_{2^j}(x) / c^j.
    """

    def __init__(self, dim, c):
        super().__init__(dim)
        self.c = real(c)
        if not self.c > 0:
            raise NormError("budget base c must be positive")
        self.levels = 1 << np.arange(int(math.log2(self.dim)) + 1)
        self.budgets = self.c ** np.arange(len(self.levels), dtype=float)

    def _values(self, X):
        return (_top_sums(X, self.levels) / self.budgets).max(axis=1)

    def params(self):
        return {"c": dump_real(self.c)}

    @classmethod
    def from_params(cls, dim, params):
        return cls(dim, params["c"])


def budget_gauge_bruteforce(c, x, tol=1e-12):
    """inf{alpha : x/alpha in P} by bisection over explicit subset constraints."""
    x = as_vector(x)
    n = len(x)
    if not x.any():
        return 0.0
    subsets = [(list(S), c**j) for j in range(int(math.log2(n)) + 1)
               for S in itertools.combinations(range(n), 1 << j)]

    def inside(alpha):
        return all(x[S].sum() / alpha <= cap for S, cap in subsets)

    lo, hi = 0.0, x.sum() + 1.0
    while not inside(hi):
        hi *= 2
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if inside(mid):
            hi = mid
        else:
            lo = mid
    return hi


@register("symmetric_approx")
class SymmetricApprox(LpCombine):
    """(sum_j (w_j F_j(x))^q)^(1/q) over smoothed Top-2^j Orlicz surrogates.

    F_j approximates the Orlicz surrogate of top_{2^j} and is q-supermodular
    with q = 2p-1.  Weights are 2 * scale * c_j so the result dominates the
    source norm pointwise.
    """

    def __init__(self, source, n=None, p=None, samples=200, seed=0, meta=None):
        dec = topk_decompose(source, n)
        p = pipeline_exponent(dec.n) if p is None else real(p)
        q = 2 * p - 1
        inners, weights = [], []
        for j, cj in enumerate(dec.scalars):
            pipe = orlicz_pipeline(topk_orlicz(1 << j), dec.n, p)
            inners.append(OrliczNorm(pipe.smoothed, source.dim, supermod_p=q))
            weights.append(2.0 * dec.scale * cj)
        super().__init__(inners, weights, q)
        self.source = source
        self.decomposition = dec
        self.n = dec.n
        self.p_pipeline = p
        self.samples = int(samples)
        self.seed = int(seed)
        if meta is None:
            from .certify import estimate_approx_ratio

            lo, hi = estimate_approx_ratio(source, self, samples, seed)[:2]
            meta = {"ratio_lo": lo, "ratio_hi": hi, "distortion": hi / lo}
        self.meta = dict(meta)

    def params(self):
        return {"source": self.source.to_dict(), "n": self.n, "p": dump_real(self.p_pipeline),
                "samples": self.samples, "seed": self.seed, "meta": self.meta,
                "decomposition": self.decomposition.to_dict()}

    @classmethod
    def from_params(cls, dim, params):
        return cls(from_dict(params["source"]), params.get("n"), params.get("p"),
                   params.get("samples", 200), params.get("seed", 0), params.get("meta"))


def psupermodular_approx_symmetric(norm, n=None, p=None, samples=200, seed=0):
    return SymmetricApprox(norm, n, p, samples, seed)
