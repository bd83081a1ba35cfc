"""Command-line front end: ``supernorm <command> [flags]``.

Exit codes: 0 success, 1 a checked property failed (the witness is in the
report), 2 bad input.  Reports go to ``--out`` (or stdout) as JSON or CSV and
always carry the effective configuration.  Settings come from flags, then a
``--config`` JSON file, then built-in defaults.
"""
import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import certify, generate as gen
from .io import InputError, dumps, load_instance, load_norm, read_json
from .norms import L1PlusL2, LpNorm, NormError, TopkNorm
from .online.trace import write_csv

COMMANDS = ("certify", "approx", "loadbalance", "cover", "pack", "probe", "olo", "demo-counterexamples", "generate")
DEFAULTS = {"seed": 0, "format": "json", "eps": 0.5, "tol": None, "samples": None, "step": 1e-3, "p": None}


def threads():
    try:
        return max(1, int(os.environ.get("SUPERNORM_THREADS", "1")))
    except ValueError:
        return 1


class Result:
    """What a command hands back: payload, flat CSV rows, pass flag, summary lines."""

    def __init__(self, payload, passed=True, lines=(), rows=None, columns=("key", "value")):
        self.payload = payload
        self.passed = passed
        self.lines = list(lines)
        self.rows = rows
        self.columns = columns


def _flat_rows(d, prefix=""):
    rows = []
    for k in sorted(d):
        v = d[k]
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            rows.extend(_flat_rows(v, key + "."))
        elif isinstance(v, (list, tuple, np.ndarray)):
            rows.append((key, json.dumps(certify._plain(v))))
        else:
            rows.append((key, v))
    return rows


def _need(cfg, key):
    if cfg.get(key) is None:
        raise InputError(f"--{key} is required for {cfg['command']}")
    return cfg[key]


def _samples(cfg, default):
    return int(cfg["samples"]) if cfg.get("samples") is not None else default


# ------------------------------------------------------------------ commands

def cmd_certify(cfg):
    norm = load_norm(_need(cfg, "norm"))
    p = cfg["p"] if cfg["p"] is not None else norm.supermod_p
    if p is None:
        raise InputError("--p is required: the norm claims no exponent")
    n = _samples(cfg, 10000)
    seed = cfg["seed"]
    tol = cfg["tol"]
    kw = {} if tol is None else {"tol": tol}
    reports = [
        certify.check_four_point(norm, p, n, seed, **kw),
        certify.check_gradient_monotone(norm, p, n, seed, **kw),
        certify.check_hessian(norm, p, min(n, 200), seed=seed),
    ]
    passed = all(r.passed for r in reports)
    rows = [(r.property, r.passed, r.worst_violation, r.tolerance, r.samples) for r in reports]
    return Result({"p": p, "norm": norm.to_dict(), "passed": passed, "reports": [r.to_dict() for r in reports]},
                  passed, [r.summary() for r in reports], rows,
                  ("property", "passed", "worst_violation", "tolerance", "samples"))


def _stage(name, lo, hi, lo_env, hi_env, slack=1e-9):
    ok = lo >= lo_env - slack and hi <= hi_env + slack
    return {"stage": name, "ratio_lo": lo, "ratio_hi": hi, "envelope": [lo_env, hi_env], "passed": ok}


def cmd_approx(cfg):
    from .orlicz import OrliczNorm, orlicz_pipeline, topk_orlicz
    from .symmetric import psupermodular_approx_symmetric

    norm = load_norm(_need(cfg, "norm"))
    n = _samples(cfg, 200)
    seed = cfg["seed"]
    stages, extra = [], {}
    if isinstance(norm, (TopkNorm, OrliczNorm)):
        if isinstance(norm, TopkNorm):
            G = topk_orlicz(norm.k)
            gnorm = OrliczNorm(G, norm.dim)
            lo, hi, _ = certify.estimate_approx_ratio(norm, gnorm, n, seed)
            stages.append(_stage("orlicz", lo, hi, 0.5, 1.0))
        else:
            G = norm.G
        pipe = orlicz_pipeline(G, norm.dim, cfg["p"])
        lo, hi, _ = certify.estimate_approx_ratio(pipe.norms["G"], pipe.norms["hinge"], n, seed)
        stages.append(_stage("piecewise", lo, hi, 1.0, 2.0))
        lo, hi, _ = certify.estimate_approx_ratio(pipe.norms["hinge"], pipe.norms["F"], n, seed)
        stages.append(_stage("smoothed", lo, hi, 1.0, 12.0))
        rep = certify.check_four_point(pipe.norms["F"], pipe.norms["F"].supermod_p, n, seed)
        extra = {"p": pipe.p, "supermod_p": pipe.norms["F"].supermod_p, "four_point": rep.to_dict()}
        passed = rep.passed
    else:
        approx = psupermodular_approx_symmetric(norm, p=cfg["p"], samples=n, seed=seed)
        meta = approx.meta
        stages.append(_stage("symmetric", meta["ratio_lo"], meta["ratio_hi"], 1.0, 50.0))
        rep = certify.check_gradient_monotone(approx, approx.p, min(n, 2000), seed)
        extra = {"p": approx.p_pipeline, "supermod_p": approx.p, "gradient_monotone": rep.to_dict()}
        passed = rep.passed
    passed = passed and all(s["passed"] for s in stages)
    rows = [(s["stage"], s["ratio_lo"], s["ratio_hi"], s["passed"]) for s in stages]
    lines = [f"{'PASS' if s['passed'] else 'FAIL'} {s['stage']}: ratio in [{s['ratio_lo']:.6g}, {s['ratio_hi']:.6g}]"
             for s in stages]
    return Result({"norm": norm.to_dict(), "stages": stages, "passed": passed, **extra}, passed, lines, rows,
                  ("stage", "ratio_lo", "ratio_hi", "passed"))


def _trace_result(trace, payload, passed, lines):
    rows = [(trace.seed,) + r for r in trace.rows()]
    return Result({"trace": trace.to_dict(), **payload, "passed": passed}, passed, lines, rows,
                  ("seed", "step", "decision", "objective_value", "feasible", "cumulative_time"))


def _instance(cfg, expected):
    kind, inst, extras = load_instance(_need(cfg, "instance"))
    if kind != expected:
        raise InputError(f"instance type {kind!r} does not match command {expected!r}")
    return inst, extras


def cmd_loadbalance(cfg):
    from .online.loadbalance import BudgetError, brute_opt_loadbalance, greedy_loadbalance, telescoping_bound

    inst, _ = _instance(cfg, "loadbalance")
    tr = greedy_loadbalance(inst)
    payload = {"cost": tr.summary["cost"]}
    passed = True
    try:
        opt = brute_opt_loadbalance(inst)
    except BudgetError:
        opt = None
    if opt is not None:
        ratio = tr.summary["cost"] / opt if opt > 0 else 1.0
        payload.update(opt=opt, ratio=ratio)
        p = inst.objective.supermod_p
        if p is not None:
            bound = telescoping_bound(p)
            passed = ratio <= bound * (1 + 1e-9)
            payload["bound"] = bound
    word = "PASS" if passed else "FAIL"
    return _trace_result(tr, payload, passed, [f"{word} loadbalance: " + json.dumps(certify._plain(payload), sort_keys=True)])


def cmd_cover(cfg):
    from .online.covering import offline_opt_cover, solve_cover

    inst, _ = _instance(cfg, "cover")
    tr = solve_cover(inst, step=cfg["step"] if cfg.get("step_set") else None)
    s = tr.summary
    payload = {k: s[k] for k in ("cost", "psi_final", "tau_final", "monotone", "feasible", "psi_bound", "delta", "q")}
    if inst.n <= 6:
        opt = offline_opt_cover(inst)
        payload.update(opt=opt, ratio=s["cost"] / opt if opt > 0 else 1.0)
    passed = s["monotone"] and s["feasible"] and s["psi_bound"]
    word = "PASS" if passed else "FAIL"
    return _trace_result(tr, payload, passed, [f"{word} cover: " + json.dumps(certify._plain(payload), sort_keys=True)])


def cmd_pack(cfg):
    from .online.packing import solve_pack

    inst, _ = _instance(cfg, "pack")
    runs = _samples(cfg, 1)
    seeds = [cfg["seed"] + k for k in range(runs)]
    with ThreadPoolExecutor(max_workers=threads()) as pool:
        traces = list(pool.map(lambda s: solve_pack(inst, s), seeds))
    traces.sort(key=lambda t: t.seed)
    values = [t.summary["value"] for t in traces]
    feasible = all(t.summary["feasible"] for t in traces)
    payload = {"runs": [t.to_dict() for t in traces], "mean_value": float(np.mean(values)), "feasible": feasible}
    if inst.T <= 8:
        from .online.packing import offline_opt_pack

        opt = offline_opt_pack(inst)
        payload.update(opt=opt, mean_ratio=opt / payload["mean_value"] if payload["mean_value"] > 0 else math.inf)
    rows = [(t.seed,) + r for t in traces for r in t.rows()]
    word = "PASS" if feasible else "FAIL"
    line = f"{word} pack: {runs} runs, mean value {payload['mean_value']:.6g}, feasible={feasible}"
    return Result({**payload, "passed": feasible}, feasible, [line], rows,
                  ("seed", "step", "decision", "objective_value", "feasible", "cumulative_time"))


def cmd_probe(cfg):
    from .probing import ENVELOPE, adaptive_opt, hallucination_value, nonadaptive_opt

    inst, _ = _instance(cfg, "probe")
    pol = adaptive_opt(inst)
    S, na, na_se = nonadaptive_opt(inst)
    mc = _samples(cfg, 0)
    hv, hv_se = hallucination_value(inst, pol, mc, cfg["seed"])
    p = cfg["p"] if cfg["p"] is not None else (inst.objective.supermod_p or 1.0)
    ratio = pol.value / hv if hv > 0 else (1.0 if pol.value == 0 else math.inf)
    slack = 1e-9 * max(1.0, pol.value)
    ordered = pol.value >= na - slack and (mc > 0 or na >= hv - slack)
    passed = ordered and ratio <= ENVELOPE * p
    payload = {"adapt": pol.value, "nonadapt": na, "nonadapt_set": S, "nonadapt_stderr": na_se,
               "hallucination": hv, "hallucination_stderr": hv_se, "ratio": ratio, "p": p,
               "envelope": ENVELOPE, "states": pol.states, "passed": passed}
    word = "PASS" if passed else "FAIL"
    line = f"{word} probe: adapt={pol.value:.6g} nonadapt={na:.6g} hallucination={hv:.6g} ratio={ratio:.4g} (limit {ENVELOPE * p:g})"
    return Result(payload, passed, [line], _flat_rows(payload))


def cmd_olo(cfg):
    from .online.olo import experts, olo_ftpl

    (dual, gains), extras = _instance(cfg, "olo")
    eps = cfg["eps"] if cfg.get("eps_set") or extras.get("eps") is None else float(extras["eps"])
    if extras.get("experts"):
        tr = experts(gains, eps, d=dual.dim)
    else:
        p = cfg["p"] if cfg["p"] is not None else extras.get("p")
        tr = olo_ftpl(dual, gains, p, eps)
    s = tr.summary
    payload = {k: s[k] for k in ("total_gain", "bound", "p") if k in s}
    payload["eps"] = eps
    passed = s["holds"]
    word = "PASS" if passed else "FAIL"
    return _trace_result(tr, payload, passed, [f"{word} olo: gain {s['total_gain']:.6g} >= bound {s['bound']:.6g}"])


def cmd_demo(cfg):
    from .symmetric import BudgetSymmetricNorm, budget_gauge_bruteforce

    seed = cfg["seed"]
    demos = []
    n = 16
    x = np.ones(n)
    x[:2] = 4.0
    low = certify.check_hessian(L1PlusL2(n), 1.3, seed=seed)
    high = certify.check_hessian(L1PlusL2(n), 3.0, samples=0, points=x[None, :], structured=False)
    demos.append({"demo": "l1_plus_l2", "refuted_at_1.3": not low.passed, "witness_passes_at_3": high.passed,
                  "witness": low.witness, "worst_at_1.3": low.worst_violation, "worst_at_3": high.worst_violation,
                  "expected": True, "ok": (not low.passed) and high.passed})
    blk = certify.refute_block_approximation(9, None, 2.0, 2.0)
    demos.append({"demo": "block_counterexample", "refuted": not blk.passed, "margin": blk.params.get("margin"),
                  "expected": True, "ok": not blk.passed})
    rng = np.random.default_rng(seed)
    c = 1.5
    B = BudgetSymmetricNorm(4, c)
    worst = 0.0
    for _ in range(20):
        y = rng.random(4)
        worst = max(worst, abs(B.value(y) - budget_gauge_bruteforce(c, y)))
    demos.append({"demo": "budget_norm", "max_abs_error": worst, "ok": bool(worst <= 1e-6)})
    passed = all(d["ok"] for d in demos)
    lines = [f"{'PASS' if d['ok'] else 'FAIL'} {d['demo']}" for d in demos]
    rows = [(d["demo"], d["ok"]) for d in demos]
    return Result({"demos": demos, "passed": passed}, passed, lines, rows, ("demo", "ok"))


def _parse_params(items):
    params = {}
    for item in items or []:
        if "=" not in item:
            raise InputError(f"parameter {item!r} is not key=value")
        k, v = item.split("=", 1)
        try:
            params[k.replace("-", "_")] = json.loads(v)
        except json.JSONDecodeError:
            params[k.replace("-", "_")] = v
    return params


def cmd_generate(cfg):
    doc = gen.generate(cfg["kind"], cfg["seed"], **_parse_params(cfg.get("param")))
    return Result(doc, True, [f"generated {cfg['kind']} (seed {cfg['seed']})"])


HANDLERS = {
    "certify": cmd_certify, "approx": cmd_approx, "loadbalance": cmd_loadbalance, "cover": cmd_cover,
    "pack": cmd_pack, "probe": cmd_probe, "olo": cmd_olo, "demo-counterexamples": cmd_demo,
    "generate": cmd_generate,
}


# ---------------------------------------------------------------- plumbing

def build_parser():
    ap = argparse.ArgumentParser(prog="supernorm", description="p-supermodular norms and norm-driven online algorithms")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        if name == "generate":
            sp.add_argument("kind", choices=sorted(gen.GENERATORS))
            sp.add_argument("--param", action="append", metavar="KEY=VALUE", help="generator parameter")
        sp.add_argument("--norm")
        sp.add_argument("--instance")
        sp.add_argument("--p", type=float)
        sp.add_argument("--eps", type=float)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--samples", type=int)
        sp.add_argument("--step", type=float)
        sp.add_argument("--tol", type=float)
        sp.add_argument("--out")
        sp.add_argument("--format", choices=("json", "csv"))
        sp.add_argument("--config", help="JSON file of defaults; flags take precedence")
    return ap


def resolve(args):
    """Merge flags over the config file over defaults."""
    cfg = dict(DEFAULTS)
    if args.config:
        file_cfg = read_json(args.config)
        if not isinstance(file_cfg, dict):
            raise InputError("config file must hold a JSON object", args.config)
        cfg.update({k.replace("-", "_"): v for k, v in file_cfg.items()})
    flags = {k: v for k, v in vars(args).items() if v is not None and k != "config"}
    cfg["step_set"] = "step" in flags or "step" in (read_json(args.config) if args.config else {})
    cfg["eps_set"] = "eps" in flags
    cfg.update(flags)
    return cfg


def render(result, cfg):
    stamp = {k: v for k, v in cfg.items() if k not in ("out", "step_set", "eps_set") and v is not None}
    if cfg["command"] == "generate":
        return dumps(result.payload)
    if cfg["format"] == "csv":
        rows = result.rows if result.rows is not None else _flat_rows(result.payload)
        return write_csv(rows, stamp, result.columns if result.rows is not None else ("key", "value"))
    return dumps({"config": stamp, "result": result.payload})


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve(args)
        result = HANDLERS[cfg["command"]](cfg)
        text = render(result, cfg)
    except (InputError, NormError, KeyError, ValueError, TypeError) as exc:
        msg = str(exc) if not isinstance(exc, KeyError) else f"missing field {exc}"
        print(f"input error: {msg}", file=sys.stderr)
        return 2
    if cfg.get("out"):
        with open(cfg["out"], "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        for line in result.lines:
            print(line)
    else:
        sys.stdout.write(text)
        for line in result.lines:
            print(line, file=sys.stderr)
    return 0 if result.passed else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
