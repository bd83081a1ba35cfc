"""JSON instance files for every command.

Online instances look like ``{"type": ..., "objective": <norm>, "data": {...}}``
with ``type`` one of loadbalance, cover, pack, olo.  Probing instances use
``{"items": [[[v, p], ...], ...], "feasible": {...}, "objective": <norm>}``.
"""
import json

import numpy as np

from .norms import NormError, from_dict, real


class InputError(NormError):
    """Unreadable or malformed input; ``where`` is "path:line:col" when known."""

    def __init__(self, message, where=None):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(exc.strerror or str(exc), str(path)) from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(exc.msg, f"{path}:{exc.lineno}:{exc.colno}") from None


def matrix(v):
    """Nested lists of JSON reals ("inf" and "a/b" allowed) as a float array."""
    try:
        return np.array([[real(e) for e in row] for row in v], dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad matrix: {exc}") from None


def vector(v):
    try:
        return np.array([real(e) for e in v], dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad vector: {exc}") from None


def load_norm(obj):
    if isinstance(obj, str):
        obj = read_json(obj)
    return from_dict(obj)


def load_instance(obj):
    """(type, instance, extras) from a parsed JSON document or a path."""
    from .online.covering import CoveringInstance
    from .online.loadbalance import LoadBalanceInstance
    from .online.packing import PackingInstance
    from .probing import ProbingInstance

    if isinstance(obj, str):
        obj = read_json(obj)
    if not isinstance(obj, dict):
        raise InputError("instance must be a JSON object")
    try:
        if "items" in obj:
            dists = [[(real(v), real(q)) for v, q in item] for item in obj["items"]]
            return "probe", ProbingInstance(dists, obj["feasible"], from_dict(obj["objective"])), {}
        kind = obj["type"]
        data = obj.get("data", {})
        objective = from_dict(obj["objective"])
        if kind == "loadbalance":
            return kind, LoadBalanceInstance(matrix(data["sizes"]), objective), {}
        if kind == "cover":
            inners = [from_dict(f) for f in data["inners"]]
            inst = CoveringInstance(matrix(data["rows"]), objective, inners, data["partitions"],
                                    data.get("delta"), float(data.get("step", 1e-3)), data.get("p"))
            return kind, inst, {}
        if kind == "pack":
            approx = data.get("approximant")
            est = data.get("opt_estimate")
            inst = PackingInstance(
                vector(data["values"]), matrix(data["sizes"]), objective,
                None if est is None else (real(est[0]), real(est[1])),
                None if approx is None else from_dict(approx["norm"]),
                1.0 if approx is None else real(approx["alpha"]),
                data.get("rho"),
            )
            return kind, inst, {}
        if kind == "olo":
            extras = {"eps": data.get("eps"), "p": data.get("p"), "experts": bool(data.get("experts", False))}
            return kind, (objective, matrix(data["gains"]) if data["gains"] else np.zeros((0, objective.dim))), extras
    except KeyError as exc:
        raise InputError(f"missing field {exc}") from None
    raise InputError(f"unknown instance type {obj.get('type')!r}")


def dumps(obj):
    """Canonical JSON text: sorted keys, fixed indent, trailing newline."""
    from .certify import _plain

    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"
