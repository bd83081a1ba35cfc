"""Sampled certificates (and refutations) of p-supermodularity.

Each check draws vectors from :mod:`supernorm.sampling`, evaluates the slack
of one inequality, normalizes it by the largest term involved, and reports
the worst value.  Positive slack above the tolerance is a violation and
comes with a witness.  Reports are pure functions of (inputs, seed).
"""
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import sampling
from .norms import SumLinfBlocks

EXACT_KINDS = ("lp", "weighted_linear")


@dataclass
class CertReport:
    property: str
    samples: int
    worst_violation: float
    tolerance: float
    seed: int
    params: dict = field(default_factory=dict)
    witness: dict = None
    skipped: int = 0
    label: str = "sampled"

    @property
    def passed(self):
        return self.worst_violation <= self.tolerance

    def to_dict(self):
        return _plain({
            "property": self.property, "passed": self.passed, "samples": self.samples,
            "worst_violation": self.worst_violation, "tolerance": self.tolerance,
            "seed": self.seed, "params": self.params, "witness": self.witness,
            "skipped": self.skipped, "label": self.label,
        })

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    def summary(self):
        word = "PASS" if self.passed else "FAIL"
        line = f"{word} {self.property}: worst_violation={self.worst_violation:.3e} (tol {self.tolerance:g}, {self.samples} samples)"
        if self.witness is not None and not self.passed:
            line += " witness=" + json.dumps(_plain(self.witness), sort_keys=True)
        return line


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _label(norm):
    return "exact" if norm.kind in EXACT_KINDS else "sampled"


def check_four_point(norm, p, samples=10000, seed=0, tol=1e-7):
    """Worst slack of ||u+w||^p - ||u||^p <= ||u+v+w||^p - ||u+v||^p."""
    rng = np.random.default_rng(seed)
    n = norm.dim
    U = sampling.mixed(rng, samples, n, nonzero=False)
    V = sampling.mixed(rng, samples, n)
    W = sampling.mixed(rng, samples, n)
    a = norm.values(U)
    b = norm.values(U + V)
    c = norm.values(U + W)
    d = norm.values(U + V + W)
    with np.errstate(divide="ignore", invalid="ignore"):
        a, b, c = a / d, b / d, c / d
        slack = (c**p - a**p) - (1.0 - b**p)
    slack = np.where(d > 0, slack, -np.inf)
    r = int(np.argmax(slack))
    worst = float(slack[r])
    witness = None
    if worst > tol:
        witness = {"u": U[r], "v": V[r], "w": W[r],
                   "lhs": d[r] ** p - (b[r] * d[r]) ** p, "rhs": (c[r] * d[r]) ** p - (a[r] * d[r]) ** p}
    return CertReport("four_point", samples, worst, tol, seed, {"p": p}, witness, label=_label(norm))


def check_gradient_monotone(norm, p, samples=10000, seed=0, tol=None):
    """grad_i ||u+v||^p >= grad_i ||u||^p, in the ratio form of the chain rule."""
    if tol is None:
        tol = 1e-7 if norm.analytic_grad else 1e-4
    rng = np.random.default_rng(seed)
    n = norm.dim
    U = sampling.mixed(rng, samples, n)
    V = sampling.mixed(rng, samples, n, nonzero=False)
    if not norm.analytic_grad:
        U = sampling.jitter(rng, U)
        V = sampling.jitter(rng, V)
    W = U + V
    nu, nw = norm.values(U), norm.values(W)
    Gu, Gw = norm.grads(U), norm.grads(W)
    rhs = (nu / nw)[:, None] ** (p - 1) * Gu
    scale = np.maximum(np.abs(Gw).max(axis=1), np.abs(rhs).max(axis=1))
    scale = np.where(scale > 0, scale, 1.0)
    viol = (rhs - Gw) / scale[:, None]
    flat = viol.reshape(-1)
    k = int(np.argmax(flat))
    r, i = divmod(k, n)
    worst = float(flat[k])
    witness = None
    if worst > tol:
        witness = {"u": U[r], "v": V[r], "i": i, "grad_sum": Gw[r, i], "scaled_grad_u": rhs[r, i]}
    return CertReport("gradient_monotone", samples, worst, tol, seed, {"p": p}, witness, label=_label(norm))


def hessian_fd(norm, x, fd_step=1e-4):
    """Finite-difference Hessian: differences of gradients when they are analytic."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    h = fd_step * float(x.max())
    back = x >= h
    eye = np.eye(n) * h
    plus = x + eye
    minus = np.where(back[:, None], x - eye, x)
    width = np.where(back, 2 * h, h)
    if norm.analytic_grad:
        G = norm.grads(np.vstack([plus, minus]))
        H = (G[:n] - G[n:]) / width[:, None]
        return 0.5 * (H + H.T)
    H = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            pts = np.array([plus[i] + eye[j], plus[i] - eye[j] * back[j],
                            minus[i] + eye[j], minus[i] - eye[j] * back[j]])
            f = norm.values(np.maximum(pts, 0.0))
            H[i, j] = (f[0] - f[1] - f[2] + f[3]) / (width[i] * (2 * h if back[j] else h))
    return 0.5 * (H + H.T)


def hessian_violation(norm, p, x, fd_step=1e-4):
    """(worst normalized slack, i, j) of H_ij >= -(p-1) g_i g_j / ||x|| at x."""
    v = norm.value(x)
    g = norm.grad(x)
    H = hessian_fd(norm, x, fd_step)
    gg = np.outer(g, g) / v
    scale = float(gg.max()) if gg.max() > 0 else 1.0
    viol = (-(p - 1) * gg - H) / scale
    k = int(np.argmax(viol))
    i, j = divmod(k, len(x))
    return float(viol[i, j]), i, j


def _refine(fun, x, rng, steps=300, box=10.0):
    """Random multiplicative hill climb kept within [x/box, x*box]."""
    best, val = x.copy(), fun(x)
    for s in range(steps):
        cand = best * np.exp(0.3 * (1 - s / steps) * rng.standard_normal(len(x)))
        cand = np.clip(cand, x / box, x * box)
        v = fun(cand)
        if v > val:
            best, val = cand, v
    return best, val


def check_hessian(norm, p, samples=200, fd_step=1e-4, seed=0, tol=1e-4, points=None, refine=False,
                  structured=True):
    """Second-order test at sampled points, plus spiked all-ones probes when ``structured``."""
    rng = np.random.default_rng(seed)
    X = sampling.jitter(rng, sampling.mixed(rng, samples, norm.dim), 1e-7) if samples else np.zeros((0, norm.dim))
    if structured:
        X = np.vstack([X, sampling.spikes(norm.dim)])
    if points is not None:
        X = np.vstack([X, np.atleast_2d(np.asarray(points, dtype=float))])
    worst, where = -np.inf, None
    for r, x in enumerate(X):
        v, i, j = hessian_violation(norm, p, x, fd_step)
        if v > worst:
            worst, where = v, (r, i, j)
    witness = None
    if worst > tol:
        r, i, j = where
        x = X[r]
        if refine:
            x, _ = _refine(lambda y: hessian_violation(norm, p, y, fd_step)[0], x, rng)
            worst, i, j = hessian_violation(norm, p, x, fd_step)
        positive = x[x > 0]
        witness = {"x": x / positive.min(), "i": i, "j": j}
    return CertReport("hessian", len(X), worst, tol, seed, {"p": p, "fd_step": fd_step}, witness)


def psi_eps(norm, p, eps, X):
    """Psi_eps = max((p-1)/eps, ||x||) row-wise, plus its gradient."""
    theta = (p - 1) / eps
    v = norm.values(X)
    G = np.zeros_like(X)
    live = v > theta
    if live.any():
        G[live] = norm.grads(X[live])
    return np.maximum(theta, v), G, v


def check_gradient_stability(norm, p, eps, samples=10000, seed=0, tol=1e-6):
    """grad Psi_eps(x+y) >= exp(-eps ||y||) grad Psi_eps(x), plus the sandwich."""
    rng = np.random.default_rng(seed)
    n = norm.dim
    theta = (p - 1) / eps
    X = sampling.mixed(rng, samples, n)
    Y = sampling.mixed(rng, samples, n)
    base = theta if theta > 0 else 1.0
    X *= (base * np.exp(rng.uniform(-1.0, 1.5, samples)) / norm.values(X))[:, None]
    Y *= (np.exp(rng.uniform(-4.0, 1.0, samples)) / eps / norm.values(Y))[:, None]
    psi_x, Gx, vx = psi_eps(norm, p, eps, X)
    _, Gxy, _ = psi_eps(norm, p, eps, X + Y)
    ny = norm.values(Y)
    viol = np.exp(-eps * ny)[:, None] * Gx - Gxy
    flat = viol.reshape(-1)
    k = int(np.argmax(flat))
    r, i = divmod(k, n)
    worst = float(flat[k])
    sandwich_ok = bool(np.all(vx <= psi_x) and np.all(psi_x <= vx + theta))
    if not sandwich_ok:
        worst = max(worst, math.inf)
    witness = None
    if worst > tol:
        witness = {"x": X[r], "y": Y[r], "i": i, "sandwich_ok": sandwich_ok}
    return CertReport("gradient_stability", samples, worst, tol, seed,
                      {"p": p, "eps": eps, "sandwich_ok": sandwich_ok}, witness)


def estimate_approx_ratio(a, b, samples=1000, seed=0):
    """(min, max, skipped) of b(x)/a(x) over mixed sparse/dense/flat/spiky x."""
    rng = np.random.default_rng(seed)
    X = sampling.mixed(rng, samples, a.dim, kinds=("uniform", "sparse", "spiky", "flat"))
    va = a.values(X)
    keep = va > 0
    ratio = b.values(X[keep]) / va[keep]
    return float(ratio.min()), float(ratio.max()), int((~keep).sum())


def block_index(m, i, k):
    """Flat index of cell (row i, column k); columns are the contiguous blocks."""
    return k * m + i


def refute_block_approximation(m, candidate=None, p=2.0, alpha=2.0):
    """Test a claimed (alpha, p) pair against the sum-of-column-maxima norm.

    The candidate is walked down the rows; row i takes the unused column
    that keeps the candidate smallest, which builds a diagonal D.  A
    p-supermodular candidate then obeys f(D) <= f(column)/(2^(1/p)-1), while
    any alpha-approximation has f(D) >= m and f(column) <= alpha.  Both hold
    only if alpha p >= (ln 2) m; the report fails (claim refuted) otherwise.
    """
    base = SumLinfBlocks(m * m, m)
    f = base if candidate is None else candidate
    if f.dim != m * m:
        raise ValueError("candidate must live on m*m coordinates")
    D = np.zeros(m * m)
    free = list(range(m))
    order = []
    for i in range(m):
        trial = []
        for k in free:
            z = D.copy()
            z[block_index(m, i, k)] = 1.0
            trial.append(f.value(z))
        k = free[int(np.argmin(trial))]
        free.remove(k)
        order.append(k)
        D[block_index(m, i, k)] = 1.0
    column = np.zeros(m * m)
    column[[block_index(m, i, order[0]) for i in range(m)]] = 1.0
    f_diag, f_col = f.value(D), f.value(column)
    chain = f_col / (2 ** (1.0 / p) - 1)
    margin = math.log(2) * m - alpha * p
    detail = {
        "order": order, "f_diag": f_diag, "f_column": f_col, "chain_bound": chain,
        "chain_holds": f_diag <= chain * (1 + 1e-9),
        "base_diag": base.value(D), "base_column": base.value(column),
        "sharp_refuted": alpha / (2 ** (1.0 / p) - 1) < m,
    }
    return CertReport("block_counterexample", 1, margin, 0.0, 0,
                      {"m": m, "p": p, "alpha": alpha, "chain": detail},
                      detail if margin > 0 else None, label="exact")
