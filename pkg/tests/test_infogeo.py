import math

import numpy as np
import pytest

from geoduel import geometry as geo
from geoduel import infogeo as ig
from geoduel.errors import NonpositiveSigma, NormalizationError, QuadratureUnderflow
from geoduel.sampling import sample_box
from oracles import trapezoid_fisher

POINTS = sample_box(10, 99, [[-2, 2], [0.5, 3]])


def _gauss_logp(x, xi):
    mu, sigma = xi
    return -0.5 * math.log(2 * math.pi) - np.log(sigma) - (x - mu) ** 2 / (2 * sigma**2)


def exponential_family(**kw):
    return ig.ParametricFamily.from_strings("exponential", "log(lam) - lam*x", ["lam"], domain=(0, math.inf),
                                           center="1/lam", scale="1/lam", **kw)


@pytest.mark.parametrize("xi", POINTS.tolist())
def test_gaussian_matches_brute_force_and_closed_form(xi):
    mu, sigma = xi
    fd = ig.fisher_jets(ig.gaussian_family(), xi)
    norm, g_ref, C_ref = trapezoid_fisher(_gauss_logp, xi, mu - 14 * sigma, mu + 14 * sigma)
    assert norm == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(fd.g, g_ref, atol=1e-6)
    np.testing.assert_allclose(fd.C, C_ref, atol=1e-6)
    closed = ig.gaussian_closed_forms(mu, sigma)
    np.testing.assert_allclose(fd.g, closed.g, atol=1e-12)
    np.testing.assert_allclose(fd.C, closed.C, atol=1e-12)
    assert abs(fd.normalization - 1) < 1e-13 and np.max(np.abs(fd.score_mean)) < 1e-13


def test_metric_derivatives_match_finite_differences():
    fam = ig.gaussian_family()
    xi = np.array([0.3, 1.4])
    fd = ig.fisher_jets(fam, xi)
    h = 1e-5
    for a in range(2):
        e = np.zeros(2)
        e[a] = h
        dg = (ig.fisher_metric(fam, xi + e) - ig.fisher_metric(fam, xi - e)) / (2 * h)
        np.testing.assert_allclose(fd.dg[a], dg, atol=1e-8)
        dC = (ig.cubic_tensor_family(fam, xi + e) - ig.cubic_tensor_family(fam, xi - e)) / (2 * h)
        np.testing.assert_allclose(fd.dC[a], dC, atol=1e-7)


def test_node_count_convergence():
    xi = (0.7, 2.2)
    coarse = ig.fisher_jets(ig.gaussian_family(ig.Quadrature(nodes=32)), xi)
    fine = ig.fisher_jets(ig.gaussian_family(ig.Quadrature(nodes=128)), xi)
    np.testing.assert_allclose(coarse.g, fine.g, atol=1e-12)
    np.testing.assert_allclose(coarse.C, fine.C, atol=1e-12)


def test_legendre_agrees_with_hermite():
    xi = (-0.4, 0.9)
    herm = ig.fisher_jets(ig.gaussian_family(), xi)
    leg = ig.fisher_jets(ig.gaussian_family(ig.Quadrature(kind="legendre")), xi)
    np.testing.assert_allclose(herm.g, leg.g, atol=1e-10)
    np.testing.assert_allclose(herm.C, leg.C, atol=1e-10)


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.5])
def test_exponential_family(lam):
    fd = ig.fisher_jets(exponential_family(), [lam])
    assert fd.g[0, 0] == pytest.approx(1 / lam**2, rel=1e-10)
    assert fd.C[0, 0, 0] == pytest.approx(-2 / lam**3, rel=1e-10)
    logp = lambda x, xi: np.log(xi[0]) - xi[0] * x
    _, g_ref, C_ref = trapezoid_fisher(logp, [lam], 0.0, 60.0 / lam, count=400001)
    assert fd.g[0, 0] == pytest.approx(g_ref[0, 0], rel=1e-6)
    assert fd.C[0, 0, 0] == pytest.approx(C_ref[0, 0, 0], rel=1e-5)


def test_g22_adjudication():
    out = ig.adjudicate_g22(xi=(0.0, 1.7))
    assert out["selected"] == "2/sigma^2"
    assert out["g22"] == pytest.approx(2 / 1.7**2, rel=1e-12)


@pytest.mark.parametrize("xi", [(0.0, 1.0), (1.2, 0.6), (-1.5, 2.4)])
def test_alpha_structure(xi):
    s = ig.family_alpha_structure(ig.gaussian_family(), xi, 1.0)
    assert s.coupling_residual < 1e-12
    assert np.max(np.abs(s.curvature_plus)) < 1e-10
    assert np.max(np.abs(geo.curvature(s.levi_civita).data)) > 1e-2
    # the mean of the +/- alpha connections is Levi-Civita
    np.testing.assert_allclose(0.5 * (s.plus.gamma + s.minus.gamma), s.levi_civita.gamma, atol=1e-12)


@pytest.mark.parametrize("sigma", [0.0, -1.0])
def test_nonpositive_sigma(sigma):
    with pytest.raises(NonpositiveSigma):
        ig.gaussian_closed_forms(0.0, sigma)


def test_unnormalized_density_rejected():
    fam = ig.ParametricFamily.from_strings("bad", "-(x - mu)^2/2", ["mu"], center="mu")
    with pytest.raises(NormalizationError):
        ig.fisher_jets(fam, [0.0])
    assert ig.fisher_jets(fam, [0.0], check=False).normalization == pytest.approx(math.sqrt(2 * math.pi))


def test_underflow():
    fam = ig.ParametricFamily.from_strings("spike", "-1e9*(x - mu)^2", ["mu"], center="mu")
    with pytest.raises(QuadratureUnderflow):
        ig.fisher_jets(fam, [0.0])


def test_family_validation():
    with pytest.raises(ValueError):
        ig.ParametricFamily.from_strings("empty", "x", [])
    with pytest.raises(ValueError):
        ig.ParametricFamily.from_strings("bad", "x", ["a"], domain=(1, 1))
    with pytest.raises(KeyError):
        ig.get_family("poisson")
    with pytest.raises(ValueError):
        ig.fisher_jets(ig.gaussian_family(), [0.0])
