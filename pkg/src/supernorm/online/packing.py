"""Online packing through a randomly scaled Lagrangian penalty.

Items t = 1..T arrive with value c_t and size column a_t; the goal is to
maximize <c, x> subject to ||A x||_P <= 1.  After rescaling values to one,
the solver guesses a penalty scale I * OPT~ / beta, greedily maximizes
x_t - [Psi(A x + x_t a_t) - Psi(A x)] for each item with Psi = scale *
||.||^p, and stops playing for good the first time a play would leave P.
"""
import math
from dataclasses import dataclass

import numpy as np

from ..norms import DimensionError, LpNorm, Norm, NormError
from .trace import RunTrace


@dataclass
class PackingInstance:
    """``sizes`` is n x T: column t is the size vector of item t."""

    values: np.ndarray
    sizes: np.ndarray
    P_norm: Norm
    opt_estimate: tuple = None
    approximant: Norm = None
    alpha: float = 1.0
    rho: float = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        self.sizes = np.asarray(self.sizes, dtype=float)
        if self.sizes.ndim == 1:
            self.sizes = self.sizes[:, None]
        if self.sizes.shape[1] != len(self.values):
            raise DimensionError(f"{len(self.values)} values but {self.sizes.shape[1]} size columns")
        if not (self.values > 0).all():
            raise NormError("item values must be positive")
        if np.isnan(self.sizes).any() or (self.sizes < 0).any():
            raise NormError("sizes must be nonnegative")
        if not self.sizes.any(axis=0).all():
            raise NormError("an item with all-zero sizes makes the optimum unbounded")
        if self.P_norm.dim != self.n:
            raise DimensionError(f"P norm has dim {self.P_norm.dim}, sizes have {self.n} rows")
        if self.approximant is None and self.P_norm.supermod_p is None:
            self.approximant, self.alpha = auto_approximant(self.P_norm)
        if self.approximant is not None and self.approximant.supermod_p is None:
            raise NormError("the approximating norm must carry a supermodularity exponent")

    @property
    def n(self):
        return self.sizes.shape[0]

    @property
    def T(self):
        return self.sizes.shape[1]

    @property
    def working_norm(self):
        return self.P_norm if self.approximant is None else self.approximant

    def width(self, norm=None):
        """max/min of a_{i,t} ||e_i|| / c_t over positive sizes."""
        if self.rho is not None:
            return float(self.rho)
        norm = self.working_norm if norm is None else norm
        unit = np.array([norm.value(e) for e in np.eye(self.n)])
        r = self.sizes * unit[:, None] / self.values[None, :]
        r = r[r > 0]
        return float(r.max() / r.min())

    def load(self, x):
        return self.sizes @ x

    def is_feasible(self, x):
        return self.P_norm.value(self.load(x)) <= 1.0


def auto_approximant(norm):
    """A supermodular stand-in for l_inf: l_q with q = max(2, ceil(log2 n))."""
    if isinstance(norm, LpNorm) and math.isinf(norm.p):
        q = max(2, math.ceil(math.log2(max(norm.dim, 2))))
        return LpNorm(norm.dim, q), norm.dim ** (1.0 / q)
    raise NormError(f"kind {norm.kind!r} has no supermodularity exponent and no approximant was given")


def guess_grid(p, beta):
    """(delta, [I choices]) for the random guess of the penalty scale."""
    if beta <= 1.0:
        return 1.0, [1.0]
    delta = math.exp(p - 1) if p - 1 <= math.log(beta) else beta
    J = max(1, math.ceil(math.log(beta) / math.log(delta) - 1e-12))
    return delta, [delta ** j for j in range(1, J + 1)]


def first_item_estimate(inst, norm):
    """Upper estimate of OPT from item 1 alone, with its approximation factor.

    With rho the width, OPT sits in [E / (n rho), E n rho] for
    E = c_1 / (a_{k,1} ||e_k||), so E n rho over-estimates OPT by at most
    (n rho)^2.
    """
    a = inst.sizes[:, 0]
    k = int(np.flatnonzero(a)[0])
    ek = np.zeros(inst.n)
    ek[k] = 1.0
    E = inst.values[0] / (a[k] * norm.value(ek))
    nr = inst.n * inst.width(norm)
    return E * nr, nr * nr


def _best_step(norm, scale, p, u, a, iters=80):
    """argmax_{x >= 0} x - scale (||u + x a||^p - ||u||^p), by bisection on the slope."""

    def slope(x):
        v = u + x * a
        if not v.any():
            return 1.0
        return 1.0 - scale * p * norm.value(v) ** (p - 1) * float(norm.grad(v) @ a)

    if slope(0.0) <= 0:
        return 0.0
    hi = 1.0 / max(norm.value(a), 1e-300)
    while slope(hi) > 0:
        hi *= 2.0
    lo = 0.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if slope(mid) > 0:
            lo = mid
        else:
            hi = mid
    return lo


def solve_pack(inst, seed=0):
    rng = np.random.default_rng(seed)
    W = inst.working_norm
    p = max(float(W.supermod_p), 2.0)
    if inst.opt_estimate is not None:
        opt_tilde, beta = float(inst.opt_estimate[0]), float(inst.opt_estimate[1])
        beta *= inst.alpha
    else:
        opt_tilde, beta = first_item_estimate(inst, W)
    delta, choices = guess_grid(p, beta)
    I = choices[int(rng.integers(len(choices)))]
    scale = I * opt_tilde / beta

    A = inst.sizes / inst.values[None, :]  # unit values: y_t = c_t x_t
    y = np.zeros(inst.T)
    stopped = None
    trace = RunTrace("pack", seed)
    u = np.zeros(inst.n)
    for t in range(inst.T):
        yt = 0.0
        if stopped is None:
            yt = _best_step(W, scale, p, u, A[:, t])
            if yt > 0:
                cand = y.copy()
                cand[t] = yt
                load = A @ cand
                if W.value(load) > 1.0 or inst.P_norm.value(load) > 1.0:
                    stopped, yt = t, 0.0
                else:
                    y, u = cand, A @ cand
        trace.record(yt / inst.values[t], float(y.sum()), inst.P_norm.value(A @ y) <= 1.0)
    x = y / inst.values
    return trace.finish(
        x=x, value=float(inst.values @ x), load_norm=inst.P_norm.value(inst.load(x)),
        feasible=bool(inst.is_feasible(x)), I=I, delta=delta, beta=beta, opt_tilde=opt_tilde,
        p=p, alpha=inst.alpha, stopped_at=stopped,
    )


# ------------------------------------------------------------------ oracle

def _simplex_min(norm, B, y, sweeps=200, points=33, rounds=8, tol=1e-13):
    """Pairwise mass exchange with a vectorized line search on each pair."""
    T = len(y)
    best = norm.value(B @ y)
    for _ in range(sweeps):
        start = best
        for s in range(T):
            for t in range(s + 1, T):
                m = y[s] + y[t]
                if m <= 0:
                    continue
                lo, hi = 0.0, m
                for _ in range(rounds):
                    lam = np.linspace(lo, hi, points)
                    Y = np.tile(y, (points, 1))
                    Y[:, s], Y[:, t] = lam, m - lam
                    v = norm.values(Y @ B.T)
                    j = int(np.argmin(v))
                    if v[j] < best:
                        best, y = float(v[j]), Y[j].copy()
                    w = (hi - lo) / (points - 1)
                    lo, hi = max(0.0, lam[j] - w), min(m, lam[j] + w)
        if start - best <= tol * best:
            break
    return best, y


def _simplex_grid(norm, B, m=400):
    T = B.shape[1]
    if T == 1:
        return norm.value(B[:, 0]), np.ones(1)
    g = np.linspace(0.0, 1.0, m + 1)
    if T == 2:
        Y = np.column_stack([g, 1 - g])
    else:
        a, b = np.meshgrid(g, g, indexing="ij")
        keep = a + b <= 1.0 + 1e-15
        Y = np.column_stack([a[keep], b[keep], np.maximum(1 - a[keep] - b[keep], 0.0)])
    v = norm.values(Y @ B.T)
    j = int(np.argmin(v))
    return float(v[j]), Y[j]


def offline_opt_pack(inst, budget=8, seed=0):
    """max <c, x> s.t. ||A x||_P <= 1, as 1 / min over the simplex of ||A diag(1/c) y||_P.

    The objective is convex on the simplex, so the restarted exchange search
    is exact up to its line-search resolution; it is meant for T <= 8 and
    slows down quadratically beyond that.
    """
    B = inst.sizes / inst.values[None, :]
    norm = inst.P_norm
    rng = np.random.default_rng(seed)
    starts = [np.full(inst.T, 1.0 / inst.T)] + list(np.eye(inst.T)) + list(rng.dirichlet(np.ones(inst.T), budget))
    best = math.inf
    for y0 in starts:
        best = min(best, _simplex_min(norm, B, y0)[0])
    if inst.T <= 3:
        v, y = _simplex_grid(norm, B)
        best = min(best, _simplex_min(norm, B, y)[0])
    return 1.0 / best
