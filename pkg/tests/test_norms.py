import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from supernorm import norms
from supernorm.norms import (
    L1PlusL2,
    LinearCompose,
    LpCombine,
    LpNorm,
    NormError,
    Smoothed,
    SumLinfBlocks,
    TopkNorm,
    WeightedLinear,
    coordinate,
    from_dict,
)

vec = st.lists(st.floats(0, 100, allow_nan=False), min_size=4, max_size=4).map(np.array)


def zoo(n=4):
    return [
        LpNorm(n, 1), LpNorm(n, 2), LpNorm(n, 3.5), LpNorm(n, math.inf), TopkNorm(n, 2),
        WeightedLinear(np.arange(1, n + 1)), SumLinfBlocks(n, 2), L1PlusL2(n),
        LpCombine([LpNorm(n, 1), LpNorm(n, math.inf)], [0.5, 2.0], 3),
        LinearCompose(np.eye(n)[::-1] * 2, LpNorm(n, 2)),
    ]


def test_eval_oracles():
    assert LpNorm(2, 2).value([3, 4]) == pytest.approx(5.0)
    assert TopkNorm(4, 2).value([5, 1, 3, 2]) == 8.0
    assert SumLinfBlocks(4, 2).value([1, 2, 3, 4]) == 6.0
    assert LpNorm(2, math.inf).value([3, 4]) == 4.0


def test_grad_oracles():
    np.testing.assert_allclose(LpNorm(2, 2).grad([3, 4]), [0.6, 0.8])
    np.testing.assert_allclose(LpNorm(2, 3).grad([1, 1]), [2 ** (-2 / 3)] * 2)
    np.testing.assert_allclose(WeightedLinear([2, 5]).grad([0.3, 7.0]), [2, 5])


def test_compose_and_combine():
    x = np.array([0.3, 1.7, 2.2])
    l2 = LpNorm(3, 2)
    assert LinearCompose(np.eye(3), l2).value(x) == pytest.approx(l2.value(x))
    assert LinearCompose(np.diag([2.0, 5.0]), LpNorm(2, 1)).value([1, 1]) == pytest.approx(7.0)
    pair = LpCombine([coordinate(2, 0), coordinate(2, 1)], [1, 1], 2)
    assert pair.value([3, 4]) == pytest.approx(5.0)
    assert LpCombine([l2], [2.5], 4).value(x) == pytest.approx(2.5 * l2.value(x))
    # two unit linear norms joined at p=1 overshoot their max by w^(1/p) = 2
    lin = LpCombine([coordinate(2, 0), coordinate(2, 1)], [1, 1], 1)
    assert lin.value([1, 1]) == pytest.approx(2.0)


def test_blocks_from_selectors():
    rng = np.random.default_rng(3)
    sel = [LinearCompose(np.eye(4)[2 * b:2 * b + 2], LpNorm(2, math.inf)) for b in range(2)]
    combo = LpCombine(sel, [1, 1], 1)
    for x in rng.random((3, 4)):
        assert combo.value(x) == pytest.approx(SumLinfBlocks(4, 2).value(x))


def test_duals():
    assert LpNorm(2, 2).dual([3, 4]) == pytest.approx(5.0)
    assert LpNorm(2, 1).dual([3, 4]) == pytest.approx(4.0)
    assert TopkNorm(3, 2).dual([1, 1, 1]) == pytest.approx(1.5)


def test_smoothing():
    lin = WeightedLinear([2.0, 5.0])
    sm = Smoothed(lin, 0.5, seed=1)
    mean_r = sm.R.mean(axis=0)
    assert sm.value([1, 1]) == pytest.approx(2 * mean_r[0] + 5 * mean_r[1])
    v = Smoothed(LpNorm(2, math.inf), 0.5, seed=0, mc_samples=4096).value([1, 1])
    assert 1.0 <= v <= 1.5
    tiny = Smoothed(LpNorm(3, 2), 1e-9)
    assert tiny.value([1, 2, 2]) == pytest.approx(3.0, rel=1e-8)


@pytest.mark.parametrize("norm", zoo(), ids=lambda f: f.kind)
def test_round_trip(norm):
    back = from_dict(json.loads(norm.to_json()))
    x = np.array([0.2, 1.5, 0.7, 3.0])
    assert back.value(x) == pytest.approx(norm.value(x), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(vec, vec, st.floats(0, 10))
def test_monotone_and_homogeneous(x, y, a):
    for f in zoo():
        assert f.value(a * x) == pytest.approx(a * f.value(x), rel=1e-9, abs=1e-9)
        assert f.value(x) <= f.value(x + y) * (1 + 1e-12) + 1e-12


@settings(max_examples=40, deadline=None)
@given(vec.filter(lambda v: v.min() > 0.1))
def test_euler_identity(x):
    for f in (LpNorm(4, 2), LpNorm(4, 3), L1PlusL2(4), WeightedLinear([1, 2, 3, 4])):
        g = f.grad(x)
        assert g @ x == pytest.approx(f.value(x), rel=1e-9)
        np.testing.assert_allclose(f.grad(3 * x), g, rtol=1e-9)


def test_rejects_bad_input():
    with pytest.raises(NormError):
        LpNorm(2, 2).value([1, -1])
    with pytest.raises(NormError):
        LpNorm(2, 2).value([1, 2, 3])
    with pytest.raises(NormError):
        LpNorm(2, 0.5)
    with pytest.raises(NormError):
        from_dict({"kind": "nope", "dim": 2})
    with pytest.raises(NormError):
        from_dict({"kind": "lp", "dim": 3, "params": {"p": "bogus"}})


def test_real_parsing():
    assert norms.real("inf") == math.inf
    assert norms.real("1/3") == pytest.approx(1 / 3)
    assert norms.dump_real(math.inf) == "inf"
