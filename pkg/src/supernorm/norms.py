"""Monotone norms on the nonnegative orthant.

Every norm is an immutable object with ``value``/``values`` (single vector or
row batch), ``grad``/``grads`` and a JSON form ``{"kind", "dim", "params"}``.
``supermod_p`` holds the exponent p for which the norm is known (or claimed)
to be p-supermodular; ``None`` means no such claim.
"""
import json
import math
from fractions import Fraction

import numpy as np


class NormError(ValueError):
    pass


class DimensionError(NormError):
    pass


class NegativeCoordinateError(NormError):
    pass


class UnsupportedKindError(NormError):
    pass


_REGISTRY = {}


def register(kind):
    def deco(cls):
        cls.kind = kind
        _REGISTRY[kind] = cls
        return cls
    return deco


def real(v):
    """Parse a JSON real: numbers, "inf", or an exact ratio such as "1/3"."""
    if isinstance(v, str):
        s = v.strip().lower()
        if s in ("inf", "+inf", "infinity"):
            return math.inf
        try:
            return float(Fraction(s))
        except (ValueError, ZeroDivisionError):
            raise NormError(f"not a real number: {v!r}") from None
    return float(v)


def dump_real(v):
    v = float(v)
    if math.isinf(v):
        return "inf"
    if v.is_integer() and abs(v) < 2**53:
        return int(v)
    return v


def as_vector(x, dim=None):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionError(f"expected a vector, got shape {x.shape}")
    if dim is not None and x.shape[0] != dim:
        raise DimensionError(f"vector has dimension {x.shape[0]}, norm expects {dim}")
    if np.isnan(x).any():
        raise NormError("vector contains NaN")
    if (x < 0).any():
        raise NegativeCoordinateError("norms here are defined on nonnegative vectors only")
    return x


def _as_rows(X, dim):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != dim:
        raise DimensionError(f"rows have dimension {X.shape[1]}, norm expects {dim}")
    return X


class Norm:
    """Base class.  Subclasses implement ``_values`` and optionally ``_grads``."""

    kind = "abstract"
    analytic_grad = False
    seminorm = False

    def __init__(self, dim, supermod_p=None):
        dim = int(dim)
        if dim < 1:
            raise DimensionError("dimension must be positive")
        self.dim = dim
        self.supermod_p = None if supermod_p is None else float(supermod_p)

    def __call__(self, x):
        return self.value(x)

    def value(self, x):
        x = as_vector(x, self.dim)
        return float(self._values(x[None, :])[0])

    def values(self, X):
        return self._values(_as_rows(X, self.dim))

    def _values(self, X):
        raise NotImplementedError

    def grad(self, x, fd_step=1e-5):
        x = as_vector(x, self.dim)
        if not x.any():
            raise NormError("gradient is undefined at the origin")
        if self.analytic_grad:
            return self._grads(x[None, :])[0]
        return fd_grad(self, x, fd_step)

    def grads(self, X, fd_step=1e-5):
        X = _as_rows(X, self.dim)
        if (~X.any(axis=1)).any():
            raise NormError("gradient is undefined at the origin")
        if self.analytic_grad:
            return self._grads(X)
        return np.array([fd_grad(self, x, fd_step) for x in X])

    def _grads(self, X):
        raise NotImplementedError

    def dual(self, z):
        raise UnsupportedKindError(f"no closed-form dual for kind {self.kind!r}")

    def params(self):
        return {}

    def to_dict(self):
        return {"kind": self.kind, "dim": self.dim, "params": self.params()}

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_params(cls, dim, params):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim}, {self.params()})"


def fd_grad(norm, x, fd_step=1e-5):
    """Central differences with step fd_step*max(x); forward where x_i < h."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    h = fd_step * float(x.max())
    eye = np.eye(n) * h
    plus = x[None, :] + eye
    back = x >= h
    minus = np.where(back[:, None], x[None, :] - eye, x[None, :])
    vals = norm.values(np.vstack([plus, minus]))
    width = np.where(back, 2 * h, h)
    return (vals[:n] - vals[n:]) / width


# ---------------------------------------------------------------- built-ins

@register("lp")
class LpNorm(Norm):
    def __init__(self, dim, p):
        p = real(p)
        if not p >= 1:
            raise NormError("lp needs p >= 1")
        self.p = p
        finite = not math.isinf(p)
        super().__init__(dim, p if finite else None)
        self.analytic_grad = finite

    def _values(self, X):
        p = self.p
        if math.isinf(p):
            return X.max(axis=1)
        if p == 1:
            return X.sum(axis=1)
        m = X.max(axis=1)
        safe = np.where(m > 0, m, 1.0)
        return m * ((X / safe[:, None]) ** p).sum(axis=1) ** (1.0 / p)

    def _grads(self, X):
        if self.p == 1:
            return np.ones_like(X)
        v = self._values(X)
        return (X / v[:, None]) ** (self.p - 1)

    def dual(self, z):
        z = as_vector(z, self.dim)
        p = self.p
        q = math.inf if p == 1 else (1.0 if math.isinf(p) else p / (p - 1))
        return LpNorm(self.dim, q).value(z)

    def params(self):
        return {"p": dump_real(self.p)}

    @classmethod
    def from_params(cls, dim, params):
        return cls(dim, params["p"])


@register("topk")
class TopkNorm(Norm):
    def __init__(self, dim, k):
        k = int(k)
        if not 1 <= k <= int(dim):
            raise NormError("topk needs 1 <= k <= dim")
        super().__init__(dim)
        self.k = k

    def _values(self, X):
        n, k = X.shape[1], self.k
        if k >= n:
            return X.sum(axis=1)
        return np.partition(X, n - k, axis=1)[:, n - k:].sum(axis=1)

    def dual(self, z):
        z = as_vector(z, self.dim)
        return max(float(z.max()), float(z.sum()) / self.k)

    def params(self):
        return {"k": self.k}

    @classmethod
    def from_params(cls, dim, params):
        return cls(dim, params["k"])


@register("weighted_linear")
class WeightedLinear(Norm):
    analytic_grad = True

    def __init__(self, w):
        w = np.array([real(v) for v in np.ravel(np.asarray(w, dtype=object))], dtype=float)
        if (w < 0).any():
            raise NormError("weights must be nonnegative")
        super().__init__(w.shape[0], 1.0)
        self.w = w
        self.seminorm = bool((w == 0).any())

    def _values(self, X):
        return X @ self.w

    def _grads(self, X):
        return np.tile(self.w, (X.shape[0], 1))

    def dual(self, z):
        z = as_vector(z, self.dim)
        pos = self.w > 0
        if (z[~pos] > 0).any():
            return math.inf
        return float((z[pos] / self.w[pos]).max()) if pos.any() else 0.0

    def params(self):
        return {"w": [dump_real(v) for v in self.w]}

    @classmethod
    def from_params(cls, dim, params):
        obj = cls(params["w"])
        if obj.dim != dim:
            raise DimensionError("weight length differs from dim")
        return obj


@register("sum_linf_blocks")
class SumLinfBlocks(Norm):
    def __init__(self, dim, block_size):
        block_size = int(block_size)
        if block_size < 1 or dim % block_size:
            raise NormError("block_size must divide dim")
        super().__init__(dim)
        self.block_size = block_size

    def _values(self, X):
        return X.reshape(X.shape[0], -1, self.block_size).max(axis=2).sum(axis=1)

    def params(self):
        return {"block_size": self.block_size}

    @classmethod
    def from_params(cls, dim, params):
        return cls(dim, params["block_size"])


@register("l1_plus_l2")
class L1PlusL2(Norm):
    analytic_grad = True

    def _values(self, X):
        return X.sum(axis=1) + np.linalg.norm(X, axis=1)

    def _grads(self, X):
        return 1.0 + X / np.linalg.norm(X, axis=1)[:, None]

    @classmethod
    def from_params(cls, dim, params):
        return cls(dim)


@register("linear_compose")
class LinearCompose(Norm):
    """x -> inner(A x) for a nonnegative matrix A (rows = inner.dim)."""

    def __init__(self, A, inner):
        A = np.array(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != inner.dim:
            raise DimensionError("A must have inner.dim rows")
        if (A < 0).any():
            raise NormError("A must be nonnegative")
        super().__init__(A.shape[1], inner.supermod_p)
        self.A = A
        self.inner = inner
        self.analytic_grad = inner.analytic_grad
        self.seminorm = inner.seminorm or bool((~A.any(axis=0)).any())

    def _values(self, X):
        return self.inner.values(X @ self.A.T)

    def grad(self, x, fd_step=1e-5):
        x = as_vector(x, self.dim)
        return self.inner.grad(self.A @ x, fd_step) @ self.A

    def grads(self, X, fd_step=1e-5):
        X = _as_rows(X, self.dim)
        return self.inner.grads(X @ self.A.T, fd_step) @ self.A

    def params(self):
        return {"A": self.A.tolist(), "inner": self.inner.to_dict()}

    @classmethod
    def from_params(cls, dim, params):
        return cls(params["A"], from_dict(params["inner"]))


@register("lp_combine")
class LpCombine(Norm):
    """(sum_j w_j^p f_j(x)^p)^(1/p); p may be inf (weighted max)."""

    def __init__(self, inners, weights, p):
        inners = list(inners)
        if not inners:
            raise NormError("lp_combine needs at least one inner norm")
        dims = {f.dim for f in inners}
        if len(dims) != 1:
            raise DimensionError("inner norms must share a dimension")
        weights = np.array([real(w) for w in weights], dtype=float)
        if weights.shape[0] != len(inners) or (weights < 0).any():
            raise NormError("need one nonnegative weight per inner norm")
        p = real(p)
        if not p >= 1:
            raise NormError("lp_combine needs p >= 1")
        finite = not math.isinf(p)
        ok = finite and all(f.supermod_p is not None and f.supermod_p <= p + 1e-12 for f in inners)
        super().__init__(dims.pop(), p if ok else None)
        self.inners = inners
        self.weights = weights
        self.p = p
        self.analytic_grad = finite and all(f.analytic_grad for f in inners)
        self.seminorm = any(f.seminorm for f in inners)

    def _inner_values(self, X):
        return np.column_stack([f.values(X) for f in self.inners]) * self.weights

    def _values(self, X):
        F = self._inner_values(X)
        return LpNorm(F.shape[1], self.p)._values(F)

    def _grads(self, X):
        F = self._inner_values(X)
        g = LpNorm(F.shape[1], self.p)._values(F)
        out = np.zeros_like(X)
        for r in range(X.shape[0]):
            for j, f in enumerate(self.inners):
                c = (F[r, j] / g[r]) ** (self.p - 1) if self.p > 1 else 1.0
                if c == 0.0 or self.weights[j] == 0.0:
                    continue
                out[r] += c * self.weights[j] * f.grad(X[r])
        return out

    def params(self):
        return {
            "p": dump_real(self.p),
            "weights": [dump_real(w) for w in self.weights],
            "inners": [f.to_dict() for f in self.inners],
        }

    @classmethod
    def from_params(cls, dim, params):
        return cls([from_dict(d) for d in params["inners"]], params["weights"], params["p"])


def bump_draws(rng, size):
    """Rejection sampler for the density proportional to exp(-1/(t(1-t))) on (0,1)."""
    out = np.empty(size)
    filled = 0
    peak = math.exp(-4.0)
    while filled < size:
        m = max(64, 3 * (size - filled))
        t = rng.random(m)
        u = rng.random(m)
        with np.errstate(divide="ignore"):
            dens = np.exp(-1.0 / (t * (1.0 - t)))
        acc = t[u * peak < dens]
        take = min(acc.shape[0], size - filled)
        out[filled:filled + take] = acc[:take]
        filled += take
    return out


@register("smoothed")
class Smoothed(Norm):
    """Average of inner(R*x) over fixed random scalings R in [1, 1+eps]^d."""

    def __init__(self, inner, eps, seed=0, mc_samples=64):
        eps = real(eps)
        mc_samples = int(mc_samples)
        if not eps > 0 or mc_samples < 1:
            raise NormError("smoothing needs eps > 0 and mc_samples >= 1")
        super().__init__(inner.dim, inner.supermod_p)
        self.inner = inner
        self.eps = eps
        self.seed = int(seed)
        self.mc_samples = mc_samples
        rng = np.random.default_rng(self.seed)
        self.R = 1.0 + eps * bump_draws(rng, mc_samples * inner.dim).reshape(mc_samples, inner.dim)
        self.analytic_grad = inner.analytic_grad
        self.seminorm = inner.seminorm

    def _values(self, X):
        Y = (X[:, None, :] * self.R[None, :, :]).reshape(-1, self.dim)
        return self.inner.values(Y).reshape(X.shape[0], self.mc_samples).mean(axis=1)

    def grad(self, x, fd_step=1e-5):
        x = as_vector(x, self.dim)
        G = self.inner.grads(self.R * x, fd_step)
        return (self.R * G).mean(axis=0)

    def grads(self, X, fd_step=1e-5):
        return np.array([self.grad(x, fd_step) for x in _as_rows(X, self.dim)])

    def params(self):
        return {"inner": self.inner.to_dict(), "eps": dump_real(self.eps),
                "seed": self.seed, "mc_samples": self.mc_samples}

    @classmethod
    def from_params(cls, dim, params):
        return cls(from_dict(params["inner"]), params["eps"], params.get("seed", 0), params.get("mc_samples", 64))


# ---------------------------------------------------------------- operations

def evaluate(norm, x):
    return norm.value(x)


def grad(norm, x, fd_step=1e-5):
    return norm.grad(x, fd_step)


def compose_linear(norm, A):
    return LinearCompose(A, norm)


def lp_combine(inners, weights, p):
    return LpCombine(inners, weights, p)


def smooth(norm, eps, seed=0, mc_samples=64):
    return Smoothed(norm, eps, seed, mc_samples)


def dual_eval(norm, z):
    return norm.dual(z)


def coordinate(dim, i, weight=1.0):
    """The seminorm x -> weight * x_i."""
    w = np.zeros(dim)
    w[i] = weight
    return WeightedLinear(w)


def from_dict(d):
    # make sure kinds defined in sibling modules are registered
    from . import orlicz, symmetric  # noqa: F401

    try:
        kind = d["kind"]
        dim = int(d["dim"])
        params = d.get("params", {})
    except (KeyError, TypeError) as exc:
        raise NormError(f"malformed norm description: {exc}") from None
    cls = _REGISTRY.get(kind)
    if cls is None:
        raise UnsupportedKindError(f"unknown norm kind {kind!r}")
    norm = cls.from_params(dim, params)
    if norm.dim != dim:
        raise DimensionError(f"{kind}: declared dim {dim} but parameters give {norm.dim}")
    return norm


def from_json(text):
    return from_dict(json.loads(text))


def known_kinds():
    from . import orlicz, symmetric  # noqa: F401
    return sorted(_REGISTRY)
