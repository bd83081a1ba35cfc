import numpy as np
import pytest

from supernorm import kernels
from supernorm.orlicz import HingeSum, orlicz_pipeline, power, topk_orlicz

needs_numba = pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba not importable")


@pytest.fixture
def both_paths():
    """Run a callable with the jit on and off; restore the original switch."""
    was = kernels.jit_enabled()

    def run(fn):
        kernels.disable_jit()
        ref = fn()
        kernels.enable_jit()
        got = fn()
        return ref, got

    yield run
    if was:
        kernels.enable_jit()
    else:
        kernels.disable_jit()


def _rows(G, X):
    s_lo, s_hi = G.brackets(X.shape[1])
    terms = G.terms()
    return lambda: kernels.orlicz_rows(X, *terms, s_lo, s_hi)


@needs_numba
@pytest.mark.parametrize("G", [power(2), power(1), topk_orlicz(3), HingeSum([(1.0, 0.2), (3.0, 1.5)]),
                               orlicz_pipeline(power(2), 8).smoothed], ids=["t2", "t", "top3", "hinges", "smooth"])
def test_orlicz_parity(both_paths, G):
    X = np.random.default_rng(0).random((60, 8)) ** 2
    X[0] = 0.0
    ref, got = both_paths(_rows(G, X))
    np.testing.assert_allclose(got, ref, rtol=1e-9)
    assert ref[0] == 0.0 and got[0] == 0.0


@needs_numba
def test_enumerate_parity(both_paths):
    sizes = np.random.default_rng(1).random((5, 3))
    ref, got = both_paths(lambda: kernels.enumerate_loads(sizes))
    np.testing.assert_array_equal(ref, got)
    assert ref.shape == (3 ** 5, 3)


def test_enumerate_codes():
    sizes = np.array([[1.0, 10.0], [100.0, 1000.0]])
    loads = kernels.enumerate_loads(sizes)
    np.testing.assert_array_equal(loads, [[101, 0], [100, 10], [1, 1000], [0, 1010]])
    np.testing.assert_array_equal(kernels.enumerate_loads(sizes, 1, 2), loads[1:3])


@needs_numba
def test_argmax_paths_parity(both_paths):
    rng = np.random.default_rng(2)
    xi = (rng.random((500, 16)) < 0.5).astype(float)
    xb = (rng.random((500, 16)) < 0.5).astype(float)
    (S, Sb), (S2, Sb2) = both_paths(lambda: kernels.argmax_paths(xi, xb, 4))
    np.testing.assert_array_equal(S, S2)
    np.testing.assert_array_equal(Sb, Sb2)


def test_argmax_paths_small():
    xi = np.array([[1.0, 1.0, 0.0, 1.0]])
    xb = np.array([[0.0, 1.0, 1.0, 1.0]])
    S, Sb = kernels.argmax_paths(xi, xb, 2)
    # step 0 ties at 0 -> coord 0; coord 0 stays ahead afterwards
    np.testing.assert_array_equal(S, [[3.0, 0.0]])
    np.testing.assert_array_equal(Sb, [[3.0, 0.0]])


def test_closed_form_l2():
    X = np.array([[3.0, 4.0], [1.0, 0.0]])
    G = power(2)
    np.testing.assert_allclose(_rows(G, X)(), [5.0, 1.0], rtol=1e-10)
