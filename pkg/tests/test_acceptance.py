"""Acceptance suite: one PASS/FAIL line per criterion, with its runtime budget.

Run ``python3 tests/test_acceptance.py`` for the table alone, or let pytest
collect it (the table is printed in the terminal summary).
"""
import math
import time

import numpy as np
import pytest

from supernorm import certify
from supernorm.norms import L1PlusL2, LpCombine, LpNorm, TopkNorm
from supernorm.online import (
    CoveringInstance,
    LoadBalanceInstance,
    PackingInstance,
    brute_opt_loadbalance,
    greedy_loadbalance,
    offline_opt_cover,
    offline_opt_pack,
    olo_ftpl,
    solve_cover,
    solve_pack,
)
from supernorm.online.loadbalance import telescoping_bound
from supernorm.online.olo import least_played
from supernorm.orlicz import OrliczNorm, orlicz_pipeline, power, topk_orlicz
from supernorm.probing import ProbingInstance, adaptive_opt, hallucination_value, linf_approximant, nonadaptive_opt
from supernorm.symmetric import BudgetSymmetricNorm, budget_gauge_bruteforce, psupermodular_approx_symmetric

RESULTS = []


def record(number, title, ok, detail, elapsed, limit):
    in_time = elapsed < limit
    word = "PASS" if ok and in_time else "FAIL"
    line = f"{word} [{number:2d}] {title}: {detail} ({elapsed:.1f}s / {limit}s)"
    RESULTS.append(line)
    print(line)
    return ok and in_time


# ---------------------------------------------------------------- criteria

def c01_lp_self_certification():
    worst = -math.inf
    for p in (1, 2, 3, 8):
        for n in (2, 8, 64):
            f = LpNorm(n, p)
            for check in (certify.check_four_point, certify.check_gradient_monotone):
                worst = max(worst, check(f, p, 10_000, 0).worst_violation)
    return worst <= 1e-7, f"worst violation {worst:.2e} over 12 (p, n) pairs"


def c02_l1l2_refutation():
    n = 16
    f = L1PlusL2(n)
    low = certify.check_hessian(f, 1.3)
    x = np.ones(n)
    x[:2] = 4.0
    r = np.linalg.norm(x)
    g = 1 + x / r
    threshold = 1 + (x[0] * x[1] / r ** 3) * (x.sum() + r) / (g[0] * g[1])
    v3, i, j = certify.hessian_violation(f, 3.0, x)
    v13 = certify.hessian_violation(f, 1.3, x)[0]
    ok = (not low.passed and low.witness is not None and v3 <= 1e-4 and v13 > 1e-4
          and 1.3 < threshold < 3.0)
    return ok, f"p=1.3 refuted (worst {low.worst_violation:.3f}); threshold {threshold:.4f}; p=3 slack {v3:.2e}"


def c03_topk_sandwich():
    bad = 0
    lo, hi = math.inf, -math.inf
    for n, k in ((4, 2), (8, 3), (16, 8)):
        X = np.random.default_rng(n).random((200, n))
        r = OrliczNorm(topk_orlicz(k), n).values(X) / TopkNorm(n, k).values(X)
        bad += int(((r < 0.5 - 1e-9) | (r > 1 + 1e-9)).sum())
        lo, hi = min(lo, r.min()), max(hi, r.max())
    return bad == 0, f"ratios in [{lo:.4f}, {hi:.4f}], {bad} violations"


def c04_orlicz_pipeline():
    notes, ok = [], True
    for name, G in (("t", power(1)), ("t^2", power(2)), ("top2", topk_orlicz(2))):
        for n in (8, 64):
            pipe = orlicz_pipeline(G, n)
            lo1, hi1, _ = certify.estimate_approx_ratio(pipe.norms["G"], pipe.norms["hinge"], 200, 1)
            lo2, hi2, _ = certify.estimate_approx_ratio(pipe.norms["hinge"], pipe.norms["F"], 200, 2)
            rep = certify.check_four_point(pipe.norms["F"], 2 * pipe.p - 1, 200, 3)
            good = lo1 >= 1 - 1e-9 and hi1 <= 2 + 1e-9 and lo2 >= 1 - 1e-9 and hi2 <= 12 + 1e-9 and rep.passed
            ok &= good
            notes.append(hi2)
    return ok, f"6 cases; max smoothing ratio {max(notes):.3f}"


def c05_symmetric():
    n = 8
    sources = [LpNorm(n, 1), LpNorm(n, math.inf),
               LpCombine([LpNorm(n, math.inf), LpNorm(n, 1)], [1.0, 1 / 3], math.inf)]
    ok, worst = True, 0.0
    for src in sources:
        A = psupermodular_approx_symmetric(src, samples=200, seed=0)
        lo, hi, _ = certify.estimate_approx_ratio(src, A, 1000, 4)
        rep = certify.check_gradient_monotone(A, A.p, 2000, 5)
        ok &= lo >= 1 - 1e-9 and hi / lo <= 50 and rep.passed
        worst = max(worst, hi / lo)
    return ok, f"max measured factor {worst:.2f}"


def c06_load_balancing():
    rng = np.random.default_rng(6)
    worst = {2: 0.0, 3: 0.0}
    violations = 0
    for k in range(500):
        p = 2 if k % 2 == 0 else 3
        T, n = int(rng.integers(1, 7)), int(rng.integers(1, 4))
        inst = LoadBalanceInstance(rng.random((T, n)), LpNorm(n, p))
        ratio = greedy_loadbalance(inst).summary["cost"] / brute_opt_loadbalance(inst)
        worst[p] = max(worst[p], ratio)
        violations += ratio > telescoping_bound(p) * (1 + 1e-9)
    return violations == 0, f"worst ratio l2 {worst[2]:.4f} (bound {telescoping_bound(2):.4f}), " \
                            f"l3 {worst[3]:.4f} (bound {telescoping_bound(3):.4f})"


def c07_covering():
    rng = np.random.default_rng(7)
    ok, worst = True, 0.0
    for k in range(100):
        rows = int(rng.integers(1, 5))
        A = rng.random((rows, 3)) * (rng.random((rows, 3)) < 0.8)
        for r in np.flatnonzero(~A.any(axis=1)):
            A[r, rng.integers(3)] = 0.1 + 0.9 * rng.random()
        p = [1, 2, 3][k % 3]
        inst = CoveringInstance(A, LpNorm(3, p), [LpNorm(1, 1)] * 3, [[0], [1], [2]], step=1e-3)
        s = solve_cover(inst).summary
        ratio = s["cost"] / offline_opt_cover(inst)
        worst = max(worst, ratio)
        ok &= s["monotone"] and s["feasible"] and s["psi_bound"] and ratio <= 50
    return ok, f"100 runs, invariants hold, worst cost/OPT {worst:.3f}"


def c08_packing():
    rng = np.random.default_rng(8)
    infeasible = 0
    ratios = []
    for k in range(500):
        T = int(rng.integers(1, 4))
        n = 3
        sizes = rng.random((n, T)) * (rng.random((n, T)) < 0.8)
        for t in np.flatnonzero(~sizes.any(axis=0)):
            sizes[rng.integers(n), t] = 0.1 + rng.random()
        values = 0.1 + rng.random(T)
        base = PackingInstance(values, sizes, LpNorm(n, 2))
        opt = offline_opt_pack(base)
        inst = PackingInstance(values, sizes, LpNorm(n, 2), opt_estimate=(opt, 1.0))
        s = solve_pack(inst, seed=k).summary
        infeasible += not s["feasible"]
        ratios.append(opt / s["value"] if s["value"] > 0 else math.inf)
    mean = float(np.mean(ratios))
    return infeasible == 0 and mean <= 10 * 2, f"{infeasible} infeasible of 500, mean ratio {mean:.3f} (limit 20)"


def c09_probing():
    rng = np.random.default_rng(9)
    ok, worst, worst_raw, bad_order = True, 0.0, 1.0, 0
    for k in range(200):
        n = int(rng.integers(1, 6))
        dists = []
        for _ in range(n):
            support = int(rng.integers(1, 4))
            vals = np.round(rng.random(support) * 10, 3) * (rng.random(support) < 0.7)
            q = np.round(rng.dirichlet(np.ones(support)), 6)
            q[-1] = 1.0 - q[:-1].sum()
            dists.append([(float(v), float(w)) for v, w in zip(vals, q)])
        kind = k % 3
        f = [LpNorm(n, 1), LpNorm(n, 2), linf_approximant(n)][kind]
        p = f.p
        inst = ProbingInstance(dists, {"card": int(rng.integers(1, n + 1))}, f)
        pol = adaptive_opt(inst)
        na = nonadaptive_opt(inst)[1]
        hv = hallucination_value(inst, pol)[0]
        slack = 1e-9 * max(1.0, pol.value)
        if not (pol.value >= na - slack and na >= hv - slack):
            bad_order += 1
        ratio = pol.value / hv if hv > 0 else (1.0 if pol.value == 0 else math.inf)
        worst_raw = max(worst_raw, ratio)
        worst = max(worst, ratio / p)
        ok &= ratio <= 10 * p
    return ok and bad_order == 0, (f"worst Adapt/hallucination {worst_raw:.3f} "
                                   f"(worst over 10p: {worst / 10:.3f}), {bad_order} ordering violations")


def c10_olo():
    violations = 0
    min_margin = math.inf
    for k in range(50):
        dual = LpNorm(4, 2 if k % 2 == 0 else 4)
        eps = 0.2 if (k // 2) % 2 == 0 else 0.5
        rng = np.random.default_rng(k)
        style = k % 3
        if style == 0:
            gains = least_played
        elif style == 1:
            order = rng.permutation(4)
            G = np.zeros((200, 4))
            G[np.arange(200), order[np.arange(200) % 4]] = 1.0
            gains = G
        else:
            noise = rng.random((200, 4)) * 0.2

            def gains(t, x, history, noise=noise):
                g = noise[t].copy()
                g[int(np.argmin(x))] = 1.0
                return g
        s = olo_ftpl(dual, gains, eps=eps, T=200).summary
        violations += not s["holds"]
        min_margin = min(min_margin, s["total_gain"] - s["bound"])
    return violations == 0, f"{violations} violations, smallest gain - bound {min_margin:.3f}"


def c11_gradient_stability():
    F = orlicz_pipeline(power(2), 8).norms["F"]
    cases = [(LpNorm(8, 2), 2.0), (F, F.supermod_p)]
    ok, worst = True, -math.inf
    for f, p in cases:
        for eps in (0.1, 1.0):
            rep = certify.check_gradient_stability(f, p, eps, 10_000, 0)
            ok &= rep.passed and rep.params["sandwich_ok"]
            worst = max(worst, rep.worst_violation)
    return ok, f"worst violation {worst:.2e}, sandwich exact"


def c12_counterexamples():
    rep = certify.refute_block_approximation(9, None, 2.0, 2.0)
    rng = np.random.default_rng(12)
    err = 0.0
    for c in (1.2, 1.5, 2.0):
        B = BudgetSymmetricNorm(4, c)
        for y in rng.random((20, 4)):
            err = max(err, abs(B.value(y) - budget_gauge_bruteforce(c, y)))
    return not rep.passed and err <= 1e-6, f"block claim refuted (margin {rep.worst_violation:.3f}), " \
                                            f"budget gauge error {err:.1e}"


CRITERIA = [
    (1, "lp self-certification", c01_lp_self_certification, 30),
    (2, "l1+l2 Hessian refutation", c02_l1l2_refutation, 5),
    (3, "Top-k Orlicz sandwich", c03_topk_sandwich, 10),
    (4, "Orlicz pipeline stages", c04_orlicz_pipeline, 60),
    (5, "symmetric approximation", c05_symmetric, 60),
    (6, "load balancing bound", c06_load_balancing, 60),
    (7, "covering invariants", c07_covering, 120),
    (8, "packing feasibility and ratio", c08_packing, 120),
    (9, "probing adaptivity gap", c09_probing, 300),
    (10, "OLO regret bound", c10_olo, 30),
    (11, "gradient stability", c11_gradient_stability, 30),
    (12, "counterexample demos", c12_counterexamples, 10),
]


def evaluate(number, title, fn, limit):
    t0 = time.perf_counter()
    ok, detail = fn()
    return record(number, title, bool(ok), detail, time.perf_counter() - t0, limit)


@pytest.mark.parametrize("number,title,fn,limit", CRITERIA, ids=[f"criterion_{c[0]:02d}" for c in CRITERIA])
def test_criterion(number, title, fn, limit):
    assert evaluate(number, title, fn, limit), RESULTS[-1]


if __name__ == "__main__":
    results = [evaluate(*c) for c in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria pass")
