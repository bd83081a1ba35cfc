import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from supernorm import certify
from supernorm.norms import LpNorm, TopkNorm, from_dict
from supernorm.orlicz import (
    ClosedForm,
    HingeSum,
    OrliczNorm,
    SmoothedSum,
    function_from_dict,
    growth_check,
    orlicz_eval,
    orlicz_grad,
    orlicz_pipeline,
    piecewise_approx,
    pipeline_exponent,
    power,
    smooth_hinges,
    topk_orlicz,
)


def test_eval_oracles():
    assert orlicz_eval(power(2), [1, 1]) == pytest.approx(math.sqrt(2), rel=1e-9)
    assert orlicz_eval(power(1), [2, 3]) == pytest.approx(5.0, rel=1e-9)
    assert orlicz_eval(topk_orlicz(2), [1, 1, 1, 1]) == pytest.approx(4 / 3, rel=1e-9)


def test_grad_oracles():
    np.testing.assert_allclose(orlicz_grad(power(2), [3, 4]), [0.6, 0.8], rtol=1e-7)
    np.testing.assert_allclose(orlicz_grad(power(1), [0.2, 5.0, 1.0]), [1, 1, 1], rtol=1e-7)


def test_topk_surrogate_tight_cases():
    c = 3.7
    x = np.zeros(5)
    x[0] = c
    assert orlicz_eval(topk_orlicz(1), x) == pytest.approx(c / 2, rel=1e-9)
    assert orlicz_eval(topk_orlicz(6), np.ones(6)) == pytest.approx(3.0, rel=1e-9)


def test_custom_closed_form_without_derivative():
    G = ClosedForm(value=lambda t: t ** 3, name="cube")
    assert orlicz_eval(G, [1, 1]) == pytest.approx(2 ** (1 / 3), rel=1e-9)


def test_hinge_sum_and_soft_terms():
    H = HingeSum([(1.0, 0.5), (2.0, 1.0)])
    np.testing.assert_allclose(H.value(np.array([0.25, 0.75, 1.0])), [0.0, 0.75, 1.5])
    S = SmoothedSum([{"class": "L", "a": 1.0, "b": 0.5, "p": 3.0}], 3.0)
    t = 0.8
    assert S.value(t) == pytest.approx((0.5 ** 3 + t ** 3) ** (1 / 3) - 0.5, rel=1e-12)


def test_growth():
    for q in (1.0, 2.0, 5.0):
        cert = growth_check(power(q), q)
        assert cert.passed and cert.max_ratio == pytest.approx(q, rel=1e-9)
    soft = SmoothedSum([{"class": "L", "a": 1.0, "b": 0.5, "p": 4.0}], 4.0)
    assert growth_check(soft, 4.0).passed


def test_piecewise_hand_computed():
    assert piecewise_approx(power(1), 2).value(np.array([0.3, 0.9])).tolist() == pytest.approx([0.3, 0.9])
    Gt = piecewise_approx(power(2), 2)
    np.testing.assert_allclose(Gt.a, [math.sqrt(2) / 2, 1.0], rtol=1e-12)
    np.testing.assert_allclose(Gt.b, [0.0, math.sqrt(2) / 2], atol=1e-12)
    np.testing.assert_allclose(Gt.value(Gt.knots), [0, 0.5, 1.0], atol=1e-12)


def test_piecewise_sandwich_cubic():
    G = power(3)
    Gt = piecewise_approx(G, 4)
    X = np.random.default_rng(0).random((50, 4))
    r = OrliczNorm(Gt, 4).values(X) / OrliczNorm(G, 4).values(X)
    assert r.min() >= 1 - 1e-9 and r.max() <= 2 + 1e-9


def test_smoothing_case_checks():
    F = smooth_hinges(HingeSum([(1.0, 2.0)]), 4)
    assert F.value(3.0) == pytest.approx(32.0)
    F = smooth_hinges(HingeSum([(1.0, 0.0)]), 4)
    assert F.value(0.37) == pytest.approx(0.37)
    n = 8
    Gt = HingeSum([(1.0, 0.5)])
    F = smooth_hinges(Gt, 6)
    t = 0.8
    assert F.value(t / 4) <= Gt.value(t) + 1 / n ** 2


def test_smoothing_exponent_floor():
    Gt = piecewise_approx(power(2), 64)
    with pytest.raises(ValueError):
        smooth_hinges(Gt, 2.0)


def test_pipeline_exponent():
    assert pipeline_exponent(8) == 6.0
    assert pipeline_exponent(64) == 10.0


@pytest.mark.parametrize("G", [power(1), power(2)], ids=["t", "t2"])
def test_pipeline_sandwich(G):
    pipe = orlicz_pipeline(G, 8)
    lo, hi, _ = certify.estimate_approx_ratio(pipe.norms["G"], pipe.norms["F"], 100, seed=1)
    assert 1 - 1e-9 <= lo and hi <= 24
    assert pipe.norms["F"].supermod_p == 2 * pipe.p - 1


def test_pipeline_growth_at_p():
    pipe = orlicz_pipeline(power(2), 8)
    assert growth_check(pipe.smoothed, pipe.p).passed


def test_topk_pipeline_distortion():
    pipe = orlicz_pipeline(topk_orlicz(2), 8)
    lo, hi, _ = certify.estimate_approx_ratio(TopkNorm(8, 2), pipe.norms["F"], 200, seed=2)
    assert hi / lo <= 48


def test_pipeline_frozen_values():
    # regression anchors; recomputed only when the construction changes on purpose
    F = orlicz_pipeline(power(2), 8).norms["F"]
    x = np.array([0.5, 1.0, 0.0, 2.0, 0.25, 0.0, 1.5, 0.75])
    assert F.value(x) == pytest.approx(3.1511535111011115, rel=1e-9)


def test_serialization_round_trip():
    F = orlicz_pipeline(power(2), 8).norms["F"]
    back = from_dict(F.to_dict())
    x = np.linspace(0.1, 2, 8)
    assert back.value(x) == pytest.approx(F.value(x), rel=1e-12)
    G = function_from_dict(topk_orlicz(3).to_dict())
    assert G.value(1.0) == pytest.approx(2 / 3)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 50, allow_nan=False), min_size=3, max_size=3).filter(lambda v: max(v) > 1e-3))
def test_power_orlicz_is_lp(x):
    for q in (1.0, 2.0, 3.0):
        assert orlicz_eval(power(q), x) == pytest.approx(LpNorm(3, q).value(x), rel=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0, 20, allow_nan=False), min_size=4, max_size=4).filter(lambda v: max(v) > 1e-3))
def test_topk_surrogate_sandwich(x):
    r = orlicz_eval(topk_orlicz(2), x) / TopkNorm(4, 2).value(x)
    assert 0.5 - 1e-9 <= r <= 1 + 1e-9
