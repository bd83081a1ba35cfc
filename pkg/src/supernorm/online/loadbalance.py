"""Greedy online load balancing and its brute-force hindsight optimum."""
import math
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..norms import DimensionError, Norm, NormError
from .trace import RunTrace


class BudgetError(NormError):
    pass


@dataclass
class LoadBalanceInstance:
    """``sizes[t, i]`` is the load job t adds to machine i (inf = forbidden)."""

    sizes: np.ndarray
    objective: Norm

    def __post_init__(self):
        self.sizes = np.atleast_2d(np.asarray(self.sizes, dtype=float))
        if np.isnan(self.sizes).any() or (self.sizes < 0).any():
            raise NormError("job sizes must be nonnegative numbers")
        if not np.isfinite(self.sizes).any(axis=1).all():
            raise NormError("every job needs at least one machine with finite size")
        if self.objective.dim != self.n:
            raise DimensionError(f"objective has dim {self.objective.dim}, instance has {self.n} machines")

    @property
    def T(self):
        return self.sizes.shape[0]

    @property
    def n(self):
        return self.sizes.shape[1]


def greedy_loadbalance(inst):
    """Send each job where the objective grows least (lowest index on ties)."""
    trace = RunTrace("loadbalance")
    load = np.zeros(inst.n)
    assignment = []
    for t in range(inst.T):
        cand = np.tile(load, (inst.n, 1))
        ok = np.isfinite(inst.sizes[t])
        cand[ok, np.flatnonzero(ok)] += inst.sizes[t, ok]
        vals = np.full(inst.n, np.inf)
        vals[ok] = inst.objective.values(cand[ok])
        i = int(np.argmin(vals))
        load = cand[i]
        assignment.append(i)
        trace.record(i, vals[i])
    return trace.finish(cost=trace.objective, loads=load.tolist(), assignment=assignment)


def brute_opt_loadbalance(inst, budget=10**7, chunk=1 << 15):
    """Exact min over all n**T assignments of the objective of the load vector."""
    total = inst.n ** inst.T
    if total > budget:
        raise BudgetError(f"{inst.n}**{inst.T} assignments exceed the budget {budget}")
    sizes = np.where(np.isfinite(inst.sizes), inst.sizes, np.nan)
    best = math.inf
    for start in range(0, total, chunk):
        L = kernels.enumerate_loads(sizes, start, min(chunk, total - start))
        L = L[~np.isnan(L).any(axis=1)]
        if len(L):
            best = min(best, float(inst.objective.values(L).min()))
    return best


def brute_opt_recursive(inst):
    """Independent depth-first enumerator, used to cross-check the kernel."""
    best = [math.inf]

    def go(t, load):
        if t == inst.T:
            best[0] = min(best[0], inst.objective.value(load))
            return
        for i in range(inst.n):
            if np.isfinite(inst.sizes[t, i]):
                nxt = load.copy()
                nxt[i] += inst.sizes[t, i]
                go(t + 1, nxt)

    go(0, np.zeros(inst.n))
    return best[0]


def telescoping_bound(p):
    """Greedy-to-optimum ratio guaranteed for a p-supermodular objective."""
    return 1.0 / (2.0 ** (1.0 / p) - 1.0)
