"""Online covering under a composed norm objective, plus offline oracles.

The objective is ``outer(f_1(y|S_1), ..., f_k(y|S_k))``.  Rows arrive one at
a time; the solver integrates the multiplicative mirror-descent flow

    dx_i/dtau = A_i (x_i + 1/d) / (grad_i Psi(x) + delta)

with ``Psi = F**q / q`` until the row is covered.  The flow is discretized by
explicit Euler steps that cap the relative growth of every coordinate at
``step`` and land exactly on the constraint.
"""
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ..norms import DimensionError, Norm, NormError
from .trace import RunTrace

MAX_SELECTOR_ROWS = 100_000
GRID_POINTS = 2_000_000


class InfeasibleError(NormError):
    pass


@dataclass
class CoveringInstance:
    rows: np.ndarray
    outer: Norm
    inners: list
    partitions: list
    delta: float = None
    step: float = 1e-3
    p: float = None
    _unit: list = field(default=None, repr=False)

    def __post_init__(self):
        self.rows = np.atleast_2d(np.asarray(self.rows, dtype=float))
        if np.isnan(self.rows).any() or (self.rows < 0).any() or (self.rows > 1).any():
            raise NormError("constraint entries must lie in [0, 1]")
        if not self.rows.any(axis=1).all():
            raise InfeasibleError("an all-zero row can never be covered")
        self.partitions = [np.asarray(S, dtype=np.int64) for S in self.partitions]
        if len(self.partitions) != len(self.inners):
            raise DimensionError("one inner norm per partition block is required")
        if self.outer.dim != len(self.inners):
            raise DimensionError(f"outer norm has dim {self.outer.dim}, expected {len(self.inners)}")
        seen = np.zeros(self.n, dtype=int)
        for S, f in zip(self.partitions, self.inners):
            if len(S) == 0 or S.min() < 0 or S.max() >= self.n:
                raise DimensionError("partition block out of range")
            if f.dim != len(S):
                raise DimensionError(f"inner norm has dim {f.dim}, block has {len(S)} variables")
            seen[S] += 1
        if (seen == 0).any():
            raise NormError(f"variables {np.flatnonzero(seen == 0).tolist()} belong to no block")
        self.copies = seen
        if self.step <= 0:
            raise NormError("step must be positive")
        if self.p is None:
            if self.outer.supermod_p is None:
                raise NormError("outer norm carries no supermodularity exponent; pass p")
            self.p = self.outer.supermod_p
        self._unit = [np.array([f.value(e) for e in np.eye(f.dim)]) for f in self.inners]

    @property
    def n(self):
        return self.rows.shape[1]

    @property
    def k(self):
        return len(self.inners)

    @property
    def overlapping(self):
        return bool((self.copies > 1).any())

    @property
    def d(self):
        sparsity = int((self.rows > 0).sum(axis=1).max())
        return max(sparsity, max(len(S) for S in self.partitions))

    @property
    def rho(self):
        """Per-variable cap max_r 1/A_ri; no optimal point needs more."""
        with np.errstate(divide="ignore"):
            inv = np.where(self.rows > 0, 1.0 / self.rows, 0.0)
        return inv.max(axis=0)

    def block_values(self, Y):
        Y = np.atleast_2d(Y)
        return np.column_stack([f.values(Y[:, S]) for f, S in zip(self.inners, self.partitions)])

    def objective_values(self, Y):
        return self.outer.values(self.block_values(Y))

    def objective(self, y):
        return float(self.objective_values(np.asarray(y, dtype=float)[None, :])[0])

    def objective_grad(self, y):
        """Chain rule through the blocks; a zero block uses f(e_i) per coordinate."""
        y = np.asarray(y, dtype=float)
        z = self.block_values(y)[0]
        g = np.zeros(self.n)
        if not z.any():
            return g
        go = self.outer.grad(z)
        for l, (f, S) in enumerate(zip(self.inners, self.partitions)):
            if go[l] == 0:
                continue
            ys = y[S]
            gi = f.grad(ys) if ys.any() else self._unit[l]
            g[S] += go[l] * gi
        return g

    def reduce(self):
        """Split shared variables into one copy per block.

        Returns the disjoint instance, ``copies[i]`` (indices of the copies of
        original variable i) and ``origin[r']`` (the original row behind each
        reduced row).  A row becomes one row per way of picking a copy for
        every variable in its support, which forces sum_i A_ri min(copies) >= 1.
        """
        if not self.overlapping:
            return self, [[i] for i in range(self.n)], list(range(len(self.rows)))
        copies = [[] for _ in range(self.n)]
        parts = []
        m = 0
        for S in self.partitions:
            parts.append(list(range(m, m + len(S))))
            for j, i in enumerate(S):
                copies[i].append(m + j)
            m += len(S)
        rows, origin = [], []
        for r, A in enumerate(self.rows):
            supp = np.flatnonzero(A)
            count = math.prod(len(copies[i]) for i in supp)
            if len(rows) + count > MAX_SELECTOR_ROWS:
                raise NormError("copy-selector rows exceed the enumeration budget")
            for pick in itertools.product(*(copies[i] for i in supp)):
                row = np.zeros(m)
                row[list(pick)] = A[supp]
                rows.append(row)
                origin.append(r)
        red = CoveringInstance(np.array(rows), self.outer, self.inners, parts, self.delta, self.step, self.p)
        return red, copies, origin


def default_delta(inst):
    """1e-3 times the cheapest single-coordinate cover of the first row."""
    A = inst.rows[0]
    supp = np.flatnonzero(A)
    Y = np.zeros((len(supp), inst.n))
    Y[np.arange(len(supp)), supp] = 1.0 / A[supp]
    return 1e-3 * float(inst.objective_values(Y).min())


def solve_cover(inst, step=None, delta=None):
    step = inst.step if step is None else float(step)
    red, copies, origin = inst.reduce()
    q = max(2.0, float(inst.p))
    if delta is None:
        delta = inst.delta if inst.delta is not None else default_delta(red)
    d = red.d
    x = np.zeros(red.n)
    tau = 0.0
    monotone = True
    dual = np.zeros(red.n)
    trace = RunTrace("cover")
    euler_steps = 0

    def grad_psi(x):
        F = red.objective(x)
        if F == 0:
            return np.zeros(red.n)
        return F ** (q - 1) * red.objective_grad(x)

    for r, A in enumerate(red.rows):
        tau_start = tau
        supp = A > 0
        s = float(A @ x)
        while s < 1.0 - 1e-12:
            gp = grad_psi(x) + delta
            rate = A * (x + 1.0 / d) / gp
            dt = step * float(np.min(gp[supp] / A[supp]))
            ds = float(A @ rate)
            if s + ds * dt >= 1.0:
                dt = (1.0 - s) / ds
            x_new = x + rate * dt
            monotone &= bool((x_new >= x).all())
            x = x_new
            tau += dt
            s = float(A @ x)
            euler_steps += 1
        dual += A * (tau - tau_start)
        trace.record(origin[r], red.objective(x), True, tau)

    y = np.array([x[c].min() for c in copies])
    cover = inst.rows @ y
    psi = red.objective(x) ** q / q
    cost = inst.objective(y)
    return trace.finish(
        x=y, cost=cost, psi_final=psi, tau_final=tau, q=q, delta=delta, d=d, step=step,
        monotone=monotone, min_cover=float(cover.min()),
        feasible=bool((cover >= 1.0 - 10 * step).all()),
        psi_bound=bool(psi <= 2.0 * tau * (1.0 + 5 * step)),
        euler_steps=euler_steps, dual_integral=dual,
    )


# ------------------------------------------------------------------ oracles

def _grid_min(inst, lo, hi, m):
    axes = [np.linspace(a, b, m) for a, b in zip(lo, hi)]
    best, arg = math.inf, None
    total = m ** inst.n
    chunk = 1 << 16
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        Y = np.empty((len(idx), inst.n))
        rest = idx
        for j in range(inst.n):
            Y[:, j] = axes[j][rest % m]
            rest = rest // m
        Y = Y[(Y @ inst.rows.T >= 1.0 - 1e-12).all(axis=1)]
        if not len(Y):
            continue
        v = inst.objective_values(Y)
        i = int(np.argmin(v))
        if v[i] < best:
            best, arg = float(v[i]), Y[i]
    return best, arg


def offline_opt_grid(inst, budget=40, zoom=4):
    """Feasible minimum over a grid on [0, rho]^n, refined around the best cell."""
    hi = inst.rho
    lo = np.zeros(inst.n)
    m = int(min(budget + 1, math.floor(GRID_POINTS ** (1.0 / inst.n))))
    if m < 3:
        raise NormError("grid mode needs at least 3 points per axis")
    best, arg = _grid_min(inst, lo, hi, m)
    if arg is None:
        raise InfeasibleError("no feasible grid point")
    for _ in range(zoom):
        width = (hi - lo) / (m - 1)
        lo, hi = np.maximum(arg - 2 * width, 0.0), arg + 2 * width
        v, a = _grid_min(inst, lo, hi, m)
        if a is not None and v <= best:
            best, arg = v, a
    return best, arg


def offline_opt_subgradient(inst, budget=40, seed=0):
    """Projected subgradient on cost / min_r <A_r, x>, rescaled onto the feasible set."""
    iters = 10 * budget
    rng = np.random.default_rng(seed)
    x = inst.rho * (0.5 + rng.random(inst.n))
    best, arg = math.inf, None
    scale = float(np.mean(inst.rho))
    for k in range(1, iters + 1):
        cov = inst.rows @ x
        r = int(np.argmin(cov))
        x = x / cov[r]
        F = inst.objective(x)
        if F < best:
            best, arg = F, x.copy()
        g = inst.objective_grad(x) - F * inst.rows[r]
        gn = np.linalg.norm(g)
        if gn == 0:
            break
        x = np.maximum(x - (0.2 * scale / math.sqrt(k)) * g / gn, 0.0)
        if not x.any():
            x = inst.rho.copy()
    return best, arg


def offline_opt_cover(inst, budget=40, mode="auto"):
    """Hindsight optimum: grid search for n <= 6 (the oracle of record), else subgradient."""
    if mode == "auto":
        mode = "grid" if inst.n <= 6 else "subgradient"
    if mode == "grid":
        if inst.n > 6:
            raise NormError("grid mode supports n <= 6")
        return offline_opt_grid(inst, budget)[0]
    if mode == "subgradient":
        return offline_opt_subgradient(inst, budget)[0]
    raise NormError(f"unknown mode {mode!r}")
