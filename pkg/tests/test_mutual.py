import numpy as np
import pytest
from hypothesis import given, strategies as st

from geoduel import geometry as geo
from geoduel import mutual as mu
from geoduel import random_fields as rf
from geoduel.connections import ExplicitConnection, parse_grid3
from geoduel.expr import parse_expr
from geoduel.jet import VectorFieldSpec
from geoduel.scenario import load_scenario
from oracles import fd_curvature, grid_fn

seeds = st.integers(0, 2**31 - 1)
dims = st.sampled_from([2, 3, 4])


def _pair(seed, n):
    rng = np.random.default_rng(seed)
    x = rf.random_point(rng, n)
    return rng, x, rf.random_explicit(rng, n).jets(x), rf.random_explicit(rng, n).jets(x)


def _fields(rng, n, degree=2):
    spec = lambda: VectorFieldSpec([parse_expr(rf.random_polynomial(rng, n, degree), rf.coords(n)) for _ in range(n)])
    return spec(), spec(), spec(), parse_expr(rf.random_polynomial(rng, n, 2), rf.coords(n))


@given(seeds, dims)
def test_exact_symmetries(seed, n):
    _, _, a, b = _pair(seed, n)
    r = mu.mutual_curvature(a, b).data
    assert np.array_equal(r, mu.mutual_curvature(b, a).data)
    assert np.array_equal(r, -np.swapaxes(r, 2, 3))
    assert np.array_equal(mu.mutual_curvature(a, a).data, mu.single_curvature(a).data)
    np.testing.assert_allclose(mu.mutual_curvature_regrouped(a, b).data, r, atol=1e-12)


@given(seeds, dims)
def test_single_curvature_is_riemann(seed, n):
    _, _, a, _ = _pair(seed, n)
    np.testing.assert_allclose(mu.single_curvature(a).data, geo.curvature(a).data, atol=1e-14)


@pytest.mark.parametrize("n", [2, 3])
def test_mean_curvature_decomposition_oracle(n):
    # mutual = (R1 + R2)/2 - alt(K K)/2, with R1, R2 from finite differences
    rng = np.random.default_rng(n)
    ga, gb = (parse_grid3(rf.random_grid3_strings(rng, n), rf.coords(n)) for _ in range(2))
    fa, fb = grid_fn(ga), grid_fn(gb)
    x = rf.random_point(rng, n)
    a, b = ExplicitConnection(ga).jets(x), ExplicitConnection(gb).jets(x)
    K = fa(x) - fb(x)
    kk = np.einsum("mlj,lik->mijk", K, K)
    ref = 0.5 * (fd_curvature(fa, x) + fd_curvature(fb, x)) - 0.5 * (kk - np.swapaxes(kk, 2, 3))
    np.testing.assert_allclose(mu.mutual_curvature(a, b).data, ref, atol=1e-8)


@given(seeds, dims)
def test_mutual_torsion_and_nonmetricity(seed, n):
    rng, x, a, b = _pair(seed, n)
    M = mu.mutual_torsion(a, b).data
    for i in range(n):
        for j in range(n):
            for k in range(n):
                assert M[i, j, k] == a.gamma[i, j, k] - b.gamma[i, k, j]
    mj = rf.random_metric(rng, n).jets(x)
    W = mu.mutual_nonmetricity(mj, a, b).data
    np.testing.assert_allclose(W, 0.5 * (geo.nonmetricity(mj, a).data + geo.nonmetricity(mj, b).data), atol=1e-15)


def test_flat_witness_has_mutual_curvature():
    sc = load_scenario("mutual")
    x = sc.points[0]
    flat0, flat1 = (sc.connection(name).jets(x) for name in ("flat0", "flat1"))
    for cj in (flat0, flat1):
        assert geo.curvature(cj).max_abs() == 0.0
        assert geo.torsion(cj)[0].max_abs() == 0.0
    assert mu.mutual_curvature(flat0, flat1).max_abs() == pytest.approx(0.5)
    assert mu.curvature_dual_residual(flat0, flat0).max_abs() == 0.0


@given(seeds, dims)
def test_semantic_value_matches_components(seed, n):
    rng, x, a, b = _pair(seed, n)
    X, Y, Z, _ = _fields(rng, n)
    jx, jy, jz = (v.jets(x) for v in (X, Y, Z))
    semantic = mu.mutual_curvature_paper(a, b, jx, jy, jz)
    r = mu.mutual_curvature(a, b).data
    np.testing.assert_allclose(semantic, np.einsum("mkij,k,i,j->m", r, jz[0], jx[0], jy[0]), atol=1e-11)


@pytest.mark.parametrize("slot", ["X", "Y", "Z"])
@given(seed=seeds, n=dims)
def test_symmetrised_definition_is_tensorial(slot, seed, n):
    rng, x, a, b = _pair(seed, n)
    X, Y, Z, f = _fields(rng, n)
    out = mu.flinearity_defect("paper", X, Y, Z, f, a, b, x, slot=slot)
    assert out["residual"] < 1e-11


@pytest.mark.parametrize("def_id", ["puechmorel", "calin"])
@given(seed=seeds, n=dims)
def test_variant_defects_match_prediction(def_id, seed, n):
    rng, x, a, b = _pair(seed, n)
    X, Y, Z, f = _fields(rng, n)
    out = mu.flinearity_defect(def_id, X, Y, Z, f, a, b, x)
    assert out["residual"] < 1e-11


def test_variant_defects_are_nonzero():
    rng, x, a, b = _pair(17, 3)
    X, Y, Z, f = _fields(rng, 3)
    for def_id in ("puechmorel", "calin"):
        assert mu.flinearity_defect(def_id, X, Y, Z, f, a, b, x)["remainder_max"] > 1e-3


def test_flinearity_argument_errors():
    rng, x, a, b = _pair(1, 2)
    X, Y, Z, f = _fields(rng, 2)
    with pytest.raises(ValueError):
        mu.flinearity_defect("nope", X, Y, Z, f, a, b, x)
    with pytest.raises(ValueError):
        mu.flinearity_defect("paper", X, Y, Z, f, a, b, x, slot="W")
    with pytest.raises(ValueError):
        mu.flinearity_defect("calin", X, Y, Z, f, a, b, x, slot="X")
