"""Online linear optimization by a deterministically shifted leader.

The feasible set P is described through its dual norm h = ||.||_{P,*}.  At
round t the player plays grad h(s_{t-1} + p/eps * 1), the maximizer over P
of the shifted gain sum.  When h is p-supermodular with h(e_i) = 1 the total
gain is at least exp(-eps) * (h(s_T) - p (h(1) - 1) / eps).
"""
import math

import numpy as np

from ..norms import LpNorm, Norm, NormError
from .trace import RunTrace


def _check_units(norm, tol=1e-9):
    units = np.array([norm.value(e) for e in np.eye(norm.dim)])
    if np.abs(units - 1.0).max() > tol:
        raise NormError(f"dual norm must satisfy h(e_i) = 1; got {units.tolist()}")


def _gain(gains, t, x, history):
    g = gains(t, x, history) if callable(gains) else np.asarray(gains[t], dtype=float)
    g = np.asarray(g, dtype=float)
    if np.isnan(g).any() or (g < 0).any() or (g > 1).any():
        raise NormError(f"gain vector at round {t} leaves [0, 1]^d")
    return g


def olo_ftpl(dual_norm, gains, p=None, eps=0.5, T=None):
    """Play against ``gains``: a T x d array or a callable (t, x_t, past gains) -> g_t."""
    if not isinstance(dual_norm, Norm):
        raise NormError("dual_norm must be a norm")
    p = dual_norm.supermod_p if p is None else float(p)
    if p is None:
        raise NormError("dual norm carries no supermodularity exponent; pass p")
    if eps <= 0:
        raise NormError("eps must be positive")
    _check_units(dual_norm)
    d = dual_norm.dim
    if T is None:
        if callable(gains):
            raise NormError("T is required with an adaptive adversary")
        T = len(gains)
    shift = np.full(d, p / eps)
    s = np.zeros(d)
    total = 0.0
    history = []
    trace = RunTrace("olo")
    for t in range(T):
        x = dual_norm.grad(s + shift)
        g = _gain(gains, t, x, history)
        history.append(g)
        total += float(g @ x)
        s = s + g
        inside = True
        try:
            inside = dual_norm.dual(x) <= 1.0 + 1e-9
        except NormError:
            pass
        trace.record(x.tolist(), total, inside)
    opt = dual_norm.value(s) if s.any() else 0.0
    width = dual_norm.value(np.ones(d))
    bound = math.exp(-eps) * (opt - p * (width - 1.0) / eps)
    trace.gains = np.array(history).reshape(-1, d)
    return trace.finish(total_gain=total, opt=opt, bound=bound, p=p, eps=eps,
                        holds=bool(total >= bound - 1e-9 * max(1.0, abs(bound))))


def experts(gains, eps=0.5, d=None, T=None):
    """Prediction with experts through an l_r dual, r = log d / log(1 + eps).

    Plays are divided by 1 + eps so they lie in the simplex; the bound is
    stated against the best single expert in hindsight.
    """
    if d is None:
        d = np.asarray(gains).shape[1]
    if d < 2:
        raise NormError("experts needs d >= 2")
    r = math.log(d) / math.log1p(eps)
    dual = LpNorm(d, r)
    if callable(gains):
        def feed(t, x, history):
            return gains(t, x / (1.0 + eps), history)
    else:
        feed = gains
    tr = olo_ftpl(dual, feed, r, eps, T)
    plays = np.array([s.decision for s in tr.steps]).reshape(-1, d) / (1.0 + eps)
    total = float((plays * tr.gains).sum())
    best = float(tr.gains.sum(axis=0).max()) if len(tr.gains) else 0.0
    regret_term = r * (d ** (1.0 / r) - 1.0) / eps
    bound = math.exp(-eps) / (1.0 + eps) * (best - regret_term)
    tr.algorithm = "olo-experts"
    tr.summary.update(
        plays=plays, total_gain=total, best_expert=best, bound=bound, p=r,
        in_simplex=bool((plays.sum(axis=1) <= 1.0 + 1e-9).all()) if len(plays) else True,
        holds=bool(total >= bound - 1e-9 * max(1.0, abs(bound))),
    )
    return tr


# ------------------------------------------------------------- adversaries

def alternating_gains(d, T):
    """Unit gain cycling through the coordinates."""
    G = np.zeros((T, d))
    G[np.arange(T), np.arange(T) % d] = 1.0
    return G


def least_played(t, x, history):
    """Reward only the coordinate the player currently weights least."""
    g = np.zeros(len(x))
    g[int(np.argmin(x))] = 1.0
    return g


def random_gains(rng, d, T, kind="uniform"):
    if kind == "uniform":
        return rng.random((T, d))
    if kind == "binary":
        return (rng.random((T, d)) < 0.5).astype(float)
    if kind == "drift":
        base = rng.random(d)
        return np.clip(base + 0.3 * rng.standard_normal((T, d)), 0.0, 1.0)
    raise NormError(f"unknown gain kind {kind!r}")
