import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from geoduel import geometry as geo
from geoduel import random_fields as rf
from geoduel.duality import torsion_dual
from geoduel.geometry import ConnectionJets, MetricField
from geoduel.transport import (
    TransportScenario,
    first_order_transport,
    gap_vector,
    parallelogram_gap,
)

seeds = st.integers(0, 2**31 - 1)
dims = st.sampled_from([2, 3, 4])
vec = lambda n: arrays(float, n, elements=st.floats(-3, 3))


def test_zero_connection_leaves_vector():
    v = np.array([0.3, -1.2])
    assert np.array_equal(first_order_transport(ConnectionJets.constant(np.zeros((2, 2, 2))), v, [1.0, 2.0]), v)


def test_single_coefficient_unrolled():
    c = 0.7
    gamma = np.zeros((2, 2, 2))
    gamma[1, 0, 1] = c
    out = first_order_transport(ConnectionJets.constant(gamma), [1.0, 0.0], [0.0, 1.0])
    assert out[0] == 1.0 and out[1] == -c


def test_polar_levi_civita():
    r, eps = 1.7, 1e-3
    cj = geo.christoffel_lc(MetricField.parse([["1", "0"], ["0", "r^2"]], ["r", "t"]).jets([r, 0.2]))
    out = first_order_transport(cj, [1.0, 0.0], [0.0, eps])
    np.testing.assert_allclose(out, [1.0, -eps / r], rtol=1e-15)
    out = first_order_transport(cj, [0.0, 1.0], [0.0, eps])
    np.testing.assert_allclose(out, [eps * r, 1.0], rtol=1e-15)


def _scenario(a, b, u, ut, dl=1e-2):
    return TransportScenario(np.zeros(len(u)), u, ut, dl, a, b)


@given(seeds, dims, st.data())
def test_torsion_dual_gap_exactly_zero(seed, n, data):
    rng = np.random.default_rng(seed)
    cj = rf.random_explicit(rng, n).jets(rf.random_point(rng, n))
    u, ut = data.draw(vec(n)), data.draw(vec(n))
    dual = torsion_dual(cj).dual
    assert not parallelogram_gap(_scenario(cj, dual, u, ut)).any()
    assert not parallelogram_gap(_scenario(cj, dual, ut, u)).any()


@given(seeds, dims, st.data())
def test_single_connection_gap_is_torsion(seed, n, data):
    rng = np.random.default_rng(seed)
    cj = rf.random_explicit(rng, n).jets(rf.random_point(rng, n))
    u, ut = data.draw(vec(n)), data.draw(vec(n))
    dl = 0.01
    T = geo.torsion(cj)[0].data
    np.testing.assert_allclose(parallelogram_gap(_scenario(cj, cj, u, ut, dl)) / dl,
                               np.einsum("ikj,j,k->i", T, ut, u), atol=1e-12)


@given(seeds, dims, st.data())
def test_torsion_free_single_connection_no_gap(seed, n, data):
    rng = np.random.default_rng(seed)
    cj = rf.random_symmetric_explicit(rng, n).jets(rf.random_point(rng, n))
    u, ut = data.draw(vec(n)), data.draw(vec(n))
    assert not parallelogram_gap(_scenario(cj, cj, u, ut)).any()


def test_distinct_torsion_free_pair_breaks_parallelogram():
    rng = np.random.default_rng(12)
    x = rf.random_point(rng, 3)
    a = rf.random_symmetric_explicit(rng, 3).jets(x)
    b = rf.random_symmetric_explicit(rng, 3).jets(x)
    gap = parallelogram_gap(_scenario(a, b, [1.0, 0.0, 0.5], [0.0, 1.0, -0.3], 1.0))
    assert np.max(np.abs(gap)) > 1e-3


@given(seeds, dims, st.data(), st.integers(-6, 6))
def test_bilinear_exact_for_dyadic_scaling(seed, n, data, k):
    rng = np.random.default_rng(seed)
    x = rf.random_point(rng, n)
    a, b = rf.random_explicit(rng, n).jets(x), rf.random_explicit(rng, n).jets(x)
    u, ut = data.draw(vec(n)), data.draw(vec(n))
    alpha = 2.0**k
    assert np.array_equal(parallelogram_gap(_scenario(a, b, alpha * u, ut)), alpha * parallelogram_gap(_scenario(a, b, u, ut)))


@given(seeds, dims, st.data(), st.floats(-4, 4))
def test_bilinear_general_scaling(seed, n, data, alpha):
    rng = np.random.default_rng(seed)
    x = rf.random_point(rng, n)
    a, b = rf.random_explicit(rng, n).jets(x), rf.random_explicit(rng, n).jets(x)
    u, ut = data.draw(vec(n)), data.draw(vec(n))
    np.testing.assert_allclose(parallelogram_gap(_scenario(a, b, alpha * u, ut)),
                               alpha * parallelogram_gap(_scenario(a, b, u, ut)), atol=1e-12)


@given(seeds, dims, st.data())
def test_gap_matches_closed_form(seed, n, data):
    rng = np.random.default_rng(seed)
    x = rf.random_point(rng, n)
    a, b = rf.random_explicit(rng, n).jets(x), rf.random_explicit(rng, n).jets(x)
    u, ut = data.draw(vec(n)), data.draw(vec(n))
    np.testing.assert_allclose(parallelogram_gap(_scenario(a, b, u, ut, 1.0)), gap_vector(a, b, u, ut), atol=1e-12)


@pytest.mark.parametrize("dl, u", [(0.0, [1.0, 0.0]), (-1.0, [1.0, 0.0]), (0.1, [np.nan, 0.0]), (0.1, [np.inf, 0.0])])
def test_scenario_validation(dl, u):
    cj = ConnectionJets.constant(np.zeros((2, 2, 2)))
    with pytest.raises(ValueError):
        TransportScenario(np.zeros(2), u, [0.0, 1.0], dl, cj, cj)
