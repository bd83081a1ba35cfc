"""The mixed vector distribution used by every sampled check.

A third of the rows are uniform on [0,1]^n, a third sparse (each coordinate
zeroed with probability 3/4) and a third spiky (one coordinate multiplied by
n).  ``flat`` adds constant vectors, which approximation-ratio estimates need.
"""
import numpy as np

KINDS = ("uniform", "sparse", "spiky")


def mixed(rng, m, n, kinds=KINDS, nonzero=True):
    X = rng.random((m, n))
    pick = rng.integers(len(kinds), size=m)
    for c, kind in enumerate(kinds):
        rows = pick == c
        k = int(rows.sum())
        if not k:
            continue
        if kind == "sparse":
            X[rows] *= rng.random((k, n)) >= 0.75
        elif kind == "spiky":
            hit = rng.integers(n, size=k)
            X[np.flatnonzero(rows), hit] *= n
        elif kind == "flat":
            X[rows] = rng.random((k, 1)) + 0.5
    if nonzero:
        dead = ~X.any(axis=1)
        if dead.any():
            X[dead, rng.integers(n, size=int(dead.sum()))] = 1.0
    return X


def jitter(rng, X, size=1e-7):
    """Nudge off measure-zero tie sets; scaled by each row's max."""
    scale = X.max(axis=1, keepdims=True)
    scale = np.where(scale > 0, scale, 1.0)
    return X + size * scale * rng.random(X.shape)


def spikes(n, scales=(2.0, 4.0, 8.0, 16.0)):
    """All-ones rows with one or two leading coordinates raised to each scale."""
    rows = []
    for s in scales:
        for k in (1, 2):
            if k <= n:
                x = np.ones(n)
                x[:k] = s
                rows.append(x)
    return np.array(rows)
