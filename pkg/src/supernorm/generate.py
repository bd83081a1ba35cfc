"""Reproducible random instances for every command.

Each generator takes keyword parameters plus a seed and returns a JSON-ready
dict; equal arguments give byte-identical files.  Values are rounded to six
decimals so files stay readable.
"""
import math

import numpy as np

from .norms import LinearCompose, LpNorm, NormError, WeightedLinear, dump_real


class GenerateError(NormError):
    pass


def _rng(seed):
    return np.random.default_rng(seed)


def _round(a):
    return np.round(np.asarray(a, dtype=float), 6).tolist()


def _check(name, value, lo, hi):
    if not lo <= value <= hi:
        raise GenerateError(f"{name}={value} outside [{lo}, {hi}]")
    return value


def _lp(dim, p):
    return LpNorm(dim, p).to_dict()


def loadbalance(T=4, n=2, p=2, seed=0):
    _check("T", T, 1, 12)
    _check("n", n, 1, 8)
    sizes = _rng(seed).random((T, n))
    return {"type": "loadbalance", "objective": _lp(n, p), "data": {"sizes": _round(sizes)}}


def cover(n=3, rows=3, blocks=None, p=2, inner_p=2, density=0.7, seed=0, step=1e-3):
    _check("n", n, 1, 12)
    _check("rows", rows, 1, 50)
    blocks = n if blocks is None else _check("blocks", blocks, 1, n)
    rng = _rng(seed)
    A = rng.random((rows, n)) * (rng.random((rows, n)) < density)
    for r in np.flatnonzero(~A.any(axis=1)):
        A[r, rng.integers(n)] = rng.random() + 0.1
    A = np.clip(A, 0.05 * (A > 0), 1.0)
    parts = [c.tolist() for c in np.array_split(np.arange(n), blocks)]
    inners = [_lp(len(S), inner_p) for S in parts]
    return {"type": "cover", "objective": _lp(blocks, p),
            "data": {"rows": _round(A), "inners": inners, "partitions": parts, "step": step}}


def facility_location_cover(facilities=2, demands=3, seed=0, step=1e-3):
    """Fractional facility location as covering with a composed objective.

    Variable (i, j) = demand i served by facility j, at flat index i*m + j.
    The objective is l1 over one block c_j * max_i y_ij per facility and one
    singleton block d_ij * y_ij per pair; the two families overlap, which the
    loader resolves by copying variables.
    """
    m = _check("facilities", facilities, 1, 4)
    n = _check("demands", demands, 1, 6)
    rng = _rng(seed)
    opening = np.round(1.0 + rng.random(m), 6)
    connect = np.round(0.1 + rng.random((n, m)), 6)
    inners, parts = [], []
    for j in range(m):
        parts.append([i * m + j for i in range(n)])
        inners.append(LinearCompose(float(opening[j]) * np.eye(n), LpNorm(n, math.inf)).to_dict())
    for i in range(n):
        for j in range(m):
            parts.append([i * m + j])
            inners.append(WeightedLinear([float(connect[i, j])]).to_dict())
    rows = np.zeros((n, n * m))
    for i in range(n):
        rows[i, i * m:(i + 1) * m] = 1.0
    return {"type": "cover", "objective": {"kind": "lp", "dim": len(inners), "params": {"p": 1}},
            "data": {"rows": rows.tolist(), "inners": inners, "partitions": parts, "step": step, "p": 1}}


def pack(n=3, T=3, p=2, seed=0):
    _check("n", n, 1, 8)
    _check("T", T, 1, 50)
    rng = _rng(seed)
    sizes = rng.random((n, T)) * (rng.random((n, T)) < 0.8)
    for t in np.flatnonzero(~sizes.any(axis=0)):
        sizes[rng.integers(n), t] = rng.random() + 0.1
    values = 0.1 + rng.random(T)
    return {"type": "pack", "objective": _lp(n, p), "data": {"values": _round(values), "sizes": _round(sizes)}}


def probe(n=3, card=2, support=2, p=2, seed=0):
    _check("n", n, 1, 6)
    _check("card", card, 0, n)
    _check("support", support, 1, 4)
    rng = _rng(seed)
    items = []
    for _ in range(n):
        vals = np.round(rng.random(support) * 10, 3)
        q = rng.random(support) + 0.1
        q = np.round(q / q.sum(), 6)
        q[-1] = round(1.0 - float(q[:-1].sum()), 6)
        items.append([[float(v), float(w)] for v, w in zip(vals, q)])
    return {"items": items, "feasible": {"card": card}, "objective": _lp(n, p)}


def olo_experts(d=4, T=200, eps=0.5, pattern="alternating", seed=0):
    _check("d", d, 2, 64)
    _check("T", T, 0, 100000)
    if pattern == "alternating":
        G = np.zeros((T, d))
        G[np.arange(T), np.arange(T) % d] = 1.0
    elif pattern == "random":
        G = _rng(seed).random((T, d))
    else:
        raise GenerateError(f"unknown pattern {pattern!r}")
    return {"type": "olo", "objective": _lp(d, math.inf),
            "data": {"gains": _round(G), "eps": dump_real(eps), "experts": True}}


GENERATORS = {
    "loadbalance": loadbalance,
    "cover": cover,
    "facility-location-cover": facility_location_cover,
    "pack": pack,
    "probe": probe,
    "olo-experts": olo_experts,
}


def generate(kind, seed=0, **params):
    try:
        fn = GENERATORS[kind]
    except KeyError:
        raise GenerateError(f"unknown generator {kind!r}; choose from {sorted(GENERATORS)}") from None
    try:
        return fn(seed=seed, **params)
    except TypeError as exc:
        raise GenerateError(str(exc)) from None
