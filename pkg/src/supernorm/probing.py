"""Stochastic probing: exact adaptive optimum, fixed-set optimum, hallucination.

Items carry finite discrete value distributions.  A probing strategy picks
items one at a time, inside a downward-closed family, and is paid the norm of
the observed values (zeros for unprobed items).  The hallucination strategy
runs the optimal adaptive policy on an independent copy of the values and is
paid according to the real ones.
"""
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .certify import CertReport
from .norms import DimensionError, LpNorm, Norm, NormError

STATE_BUDGET = 10**6
EXACT_BUDGET = 10**6
ENVELOPE = 10.0


class NotDownwardClosedError(NormError):
    pass


class StateBudgetError(NormError):
    pass


@dataclass
class ProbingInstance:
    """``dists[i]`` is a list of (value, probability) pairs for item i.

    ``feasible`` is ``{"card": k}`` or ``{"sets": [[...], ...]}``; an explicit
    family must already be downward closed (the empty set is implied).
    """

    dists: list
    feasible: dict
    objective: Norm

    def __post_init__(self):
        self.values, self.probs = [], []
        for i, dist in enumerate(self.dists):
            v = np.array([float(a) for a, _ in dist])
            q = np.array([float(b) for _, b in dist])
            if len(v) == 0 or (v < 0).any() or (q < 0).any():
                raise NormError(f"item {i}: values and probabilities must be nonnegative")
            if abs(q.sum() - 1.0) > 1e-12:
                raise NormError(f"item {i}: probabilities sum to {q.sum()!r}, not 1")
            self.values.append(v)
            self.probs.append(q)
        if self.objective.dim != self.n:
            raise DimensionError(f"objective has dim {self.objective.dim}, instance has {self.n} items")
        if "card" in self.feasible:
            k = int(self.feasible["card"])
            if k < 0:
                raise NormError("cardinality bound must be nonnegative")
            self._allowed = {m for m in range(1 << self.n) if bin(m).count("1") <= k}
        elif "sets" in self.feasible:
            fam = {0}
            for S in self.feasible["sets"]:
                m = 0
                for i in S:
                    if not 0 <= int(i) < self.n:
                        raise DimensionError(f"item {i} out of range")
                    m |= 1 << int(i)
                fam.add(m)
            for m in fam:
                for i in range(self.n):
                    if m >> i & 1 and (m & ~(1 << i)) not in fam:
                        raise NotDownwardClosedError(f"family is not downward closed at {self.members(m)}")
            self._allowed = fam
        else:
            raise NormError("feasible must give 'card' or 'sets'")

    @property
    def n(self):
        return len(self.dists)

    def members(self, mask):
        return [i for i in range(self.n) if mask >> i & 1]

    def allowed(self, mask):
        return mask in self._allowed

    def feasible_sets(self):
        return sorted(self._allowed)

    def maximal_sets(self):
        return [m for m in self._allowed
                if not any((m | 1 << i) in self._allowed for i in range(self.n) if not m >> i & 1)]

    def sample(self, rng, size):
        """Paired draws (X, Xbar) as value indices, one stream interleaved per item."""
        U = rng.random((size, self.n, 2))
        idx = np.empty((size, self.n, 2), dtype=np.int64)
        for i in range(self.n):
            cdf = np.cumsum(self.probs[i])
            cdf[-1] = 1.0
            idx[:, i, :] = np.searchsorted(cdf, U[:, i, :], side="right")
        return idx[:, :, 0], idx[:, :, 1]

    def vectors(self, idx):
        """Value vectors from index rows; -1 marks an unprobed (zero) item."""
        idx = np.atleast_2d(idx)
        X = np.zeros(idx.shape, dtype=float)
        for i in range(self.n):
            col = idx[:, i]
            ok = col >= 0
            X[ok, i] = self.values[i][col[ok]]
        return X


# ------------------------------------------------------------------- exact

def expected_value(inst, mask, mc=100_000, seed=0):
    """E f(X_S) for the set encoded by ``mask``; exact when enumerable."""
    items = inst.members(mask)
    count = math.prod(len(inst.values[i]) for i in items)
    if count <= EXACT_BUDGET:
        if not items:
            return 0.0, 0.0
        grids = list(itertools.product(*(range(len(inst.values[i])) for i in items)))
        idx = np.full((len(grids), inst.n), -1, dtype=np.int64)
        idx[:, items] = np.array(grids)
        w = np.ones(len(grids))
        for i in items:
            w *= inst.probs[i][idx[:, i]]
        return float(w @ inst.objective.values(inst.vectors(idx))), 0.0
    X, _ = inst.sample(np.random.default_rng(seed), mc)
    X[:, [i for i in range(inst.n) if i not in items]] = -1
    v = inst.objective.values(inst.vectors(X))
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(mc))


def nonadaptive_opt(inst, mc=100_000, seed=0):
    """Best fixed probe set: (members, value, stderr).  Only maximal sets need checking."""
    best = (0, -1.0, 0.0)
    for m in inst.maximal_sets():
        v, se = expected_value(inst, m, mc, seed)
        if v > best[1] + 1e-15 * max(1.0, abs(v)):
            best = (m, v, se)
    return inst.members(best[0]), best[1], best[2]


@dataclass
class AdaptivePolicy:
    """Decision tree keyed by the observed value-index tuple (-1 = unprobed)."""

    instance: ProbingInstance
    action: dict
    value: float
    states: int = 0
    leaves: list = field(default_factory=list)

    def next_probe(self, state):
        return self.action[tuple(state)]

    def probe_set(self, draw):
        """Mask of items probed when item values (as indices) are ``draw``."""
        state = [-1] * self.instance.n
        mask = 0
        while True:
            i = self.action[tuple(state)]
            if i is None:
                return mask
            state[i] = int(draw[i])
            mask |= 1 << i

    def leaf_distribution(self):
        """[(probability, mask)] over the policy's leaves."""
        out = []
        inst = self.instance

        def walk(state, mask, prob):
            i = self.action[tuple(state)]
            if i is None:
                out.append((prob, mask))
                return
            for j, q in enumerate(inst.probs[i]):
                if q > 0:
                    state[i] = j
                    walk(state, mask | 1 << i, prob * q)
            state[i] = -1

        walk([-1] * inst.n, 0, 1.0)
        return out


def adaptive_opt(inst, budget=STATE_BUDGET):
    """Exact optimal adaptive policy by backward induction; stops on ties."""
    n = inst.n
    sizes = [len(v) for v in inst.values]
    count = sum(math.prod(sizes[i] for i in inst.members(m)) for m in inst.feasible_sets())
    if count > budget:
        raise StateBudgetError(f"{count} states exceed the budget {budget}")
    states = []
    for m in inst.feasible_sets():
        items = inst.members(m)
        for combo in itertools.product(*(range(sizes[i]) for i in items)):
            s = [-1] * n
            for i, j in zip(items, combo):
                s[i] = j
            states.append(tuple(s))
    stop = dict(zip(states, inst.objective.values(inst.vectors(np.array(states, dtype=np.int64)))))
    value, action = {}, {}
    for s in sorted(states, key=lambda s: -sum(j >= 0 for j in s)):
        mask = sum(1 << i for i in range(n) if s[i] >= 0)
        best, arg = stop[s], None
        for i in range(n):
            if s[i] >= 0 or not inst.allowed(mask | 1 << i):
                continue
            ev = 0.0
            t = list(s)
            for j, q in enumerate(inst.probs[i]):
                t[i] = j
                ev += q * value[tuple(t)]
            if ev > best * (1 + 1e-12) + 1e-300:
                best, arg = ev, i
        value[s] = best
        action[s] = arg
    root = tuple([-1] * n)
    pol = AdaptivePolicy(inst, action, value[root], len(states))
    pol.leaves = pol.leaf_distribution()
    return pol


def hallucination_value(inst, policy, mc=0, seed=0):
    """Value of running ``policy`` on an independent copy: (mean, stderr).

    ``mc=0`` is exact: each policy leaf contributes its probability times the
    fixed-set value of its probe set.  Otherwise paired draws are simulated.
    """
    if mc <= 0:
        cache = {}
        total = 0.0
        for prob, mask in policy.leaves:
            if mask not in cache:
                cache[mask] = expected_value(inst, mask)[0]
            total += prob * cache[mask]
        return total, 0.0
    X, Xbar = inst.sample(np.random.default_rng(seed), mc)
    keys, inverse = np.unique(Xbar, axis=0, return_inverse=True)
    masks = np.array([policy.probe_set(k) for k in keys], dtype=np.int64)[inverse.ravel()]
    hide = ((masks[:, None] >> np.arange(inst.n)) & 1) == 0
    X = np.where(hide, -1, X)
    v = inst.objective.values(inst.vectors(X))
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(mc))


def adaptive_mc(inst, policy, mc=100_000, seed=0):
    """Monte Carlo estimate of the adaptive value, for exact-vs-sampled checks."""
    X, _ = inst.sample(np.random.default_rng(seed), mc)
    keys, inverse = np.unique(X, axis=0, return_inverse=True)
    masks = np.array([policy.probe_set(k) for k in keys], dtype=np.int64)[inverse.ravel()]
    hide = ((masks[:, None] >> np.arange(inst.n)) & 1) == 0
    v = inst.objective.values(inst.vectors(np.where(hide, -1, X)))
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(mc))


# -------------------------------------------------------------- decoupling

def _iid_pairs(rng, n, T, mc):
    coords = rng.integers(n, size=(mc, T))
    xi, xibar = rng.random((mc, T)), rng.random((mc, T))
    S = np.zeros((mc, n))
    Sb = np.zeros((mc, n))
    rows = np.repeat(np.arange(mc), T)
    np.add.at(S, (rows, coords.ravel()), xi.ravel())
    coords_b = rng.integers(n, size=(mc, T))
    np.add.at(Sb, (rows, coords_b.ravel()), xibar.ravel())
    return S, Sb


def _argmax_pairs(rng, n, T, mc):
    xi = (rng.random((mc, T)) < 0.5).astype(float)
    xibar = (rng.random((mc, T)) < 0.5).astype(float)
    return kernels.argmax_paths(xi, xibar, n)


def _probing_pairs(rng, inst, policy, mc):
    X, Xbar = inst.sample(rng, mc)
    keys, inverse = np.unique(X, axis=0, return_inverse=True)
    masks = np.array([policy.probe_set(k) for k in keys], dtype=np.int64)[inverse.ravel()]
    hide = ((masks[:, None] >> np.arange(inst.n)) & 1) == 0
    return inst.vectors(np.where(hide, -1, X)), inst.vectors(np.where(hide, -1, Xbar))


def decoupling_check(generator, norm, p=None, mc=100_000, seed=0, T=32, instance=None,
                     policy=None, envelope=ENVELOPE):
    """Compare E||sum V_t|| with E||sum Vbar_t|| for a tangent pair generator.

    ``generator`` is "iid", "argmax" (both sequences load the coordinate where
    the running sum of V is largest) or "probing" (the optimal policy's
    probes, with Vbar an independent copy of each probed value).  The report
    carries C = ratio / p and passes when C <= envelope.
    """
    p = norm.supermod_p if p is None else float(p)
    if p is None:
        raise NormError("pass p for a norm without a supermodularity exponent")
    rng = np.random.default_rng(seed)
    if generator == "iid":
        S, Sb = _iid_pairs(rng, norm.dim, T, mc)
    elif generator == "argmax":
        S, Sb = _argmax_pairs(rng, norm.dim, T, mc)
    elif generator == "probing":
        if instance is None:
            raise NormError("the probing generator needs an instance")
        policy = adaptive_opt(instance) if policy is None else policy
        S, Sb = _probing_pairs(rng, instance, policy, mc)
    else:
        raise NormError(f"unknown generator {generator!r}")
    a, b = norm.values(S), norm.values(Sb)
    lhs, rhs = float(a.mean()), float(b.mean())
    ratio = lhs / rhs if rhs > 0 else (1.0 if lhs == 0 else math.inf)
    C = ratio / p
    return CertReport(
        property="decoupling", samples=mc, worst_violation=C, tolerance=envelope, seed=seed,
        params={"generator": generator, "p": p, "T": T, "lhs": lhs, "rhs": rhs, "ratio": ratio, "C": C,
                "lhs_stderr": float(a.std(ddof=1) / math.sqrt(mc)) if mc > 1 else 0.0,
                "rhs_stderr": float(b.std(ddof=1) / math.sqrt(mc)) if mc > 1 else 0.0},
    )


def linf_approximant(n):
    """l_q with q = max(2, ceil(log2 n)): within n**(1/q) <= 2 of l_inf."""
    return LpNorm(n, max(2, math.ceil(math.log2(max(n, 2)))))
