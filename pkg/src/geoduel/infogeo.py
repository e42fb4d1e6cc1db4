"""Parametric families on the real line: Fisher metric, cubic tensor and alpha-structure.

Expectations are quadrature sums whose integrands are jets in the parameters,
so parameter derivatives of g and C are exact derivatives of the same sums.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .duality import alpha_connection
from .errors import NonpositiveSigma, NormalizationError, QuadratureUnderflow
from .expr import Expr, eval_value, parse_expr
from .geometry import ConnectionJets, MetricJets, christoffel_lc, curvature, invert_metric, lower_connection
from .jet import Jet, evaluate, layout

NORMALIZATION_TOL = 1e-8
SCORE_TOL = 1e-9

G22_NOTE = (
    "Fisher g22 adjudicated by quadrature: g22 = 2/sigma^2, so g = diag(1, 2)/sigma^2; "
    "the alternative inline value 1/(2 sigma^2) is rejected"
)


@dataclass(frozen=True)
class Quadrature:
    kind: str = "auto"  # auto | hermite | legendre
    nodes: int = 64  # Hermite node count
    panels: int = 512  # composite Legendre panels
    panel_order: int = 8


@lru_cache(maxsize=None)
def _hermite(n):
    z, w = np.polynomial.hermite.hermgauss(n)
    # fold the e^{-z^2} weight back in through the log so nothing overflows
    return z, np.log(w) + z * z


@lru_cache(maxsize=None)
def _legendre(n):
    return np.polynomial.legendre.leggauss(n)


@dataclass(frozen=True, eq=False)
class ParametricFamily:
    """log p(x; xi) as an expression in the sample variable and the parameters.

    ``center`` and ``scale`` locate the bulk of the density for Hermite
    quadrature; they are evaluated at xi but never differentiated, because the
    quadrature nodes do not depend on the parameters being differentiated.
    """

    name: str
    log_density: Expr
    params: tuple
    sample_var: str = "x"
    domain: tuple = (-math.inf, math.inf)
    center: Expr = None
    scale: Expr = None
    quadrature: Quadrature = field(default_factory=Quadrature)

    def __post_init__(self):
        if len(self.params) < 1:
            raise ValueError("a family needs at least one parameter")
        lo, hi = self.domain
        if not lo < hi:
            raise ValueError("sample domain must be a non-empty interval")

    @classmethod
    def from_strings(cls, name, log_density, params: Sequence[str], sample_var="x",
                     domain=(-math.inf, math.inf), center=None, scale=None, quadrature=None):
        coords = [sample_var] + list(params)
        parse = lambda s: None if s is None else parse_expr(str(s), coords)
        return cls(name, parse(log_density), tuple(params), sample_var,
                   (float(domain[0]), float(domain[1])), parse(center), parse(scale),
                   quadrature or Quadrature())

    @property
    def dim(self):
        return len(self.params)

    def _locate(self, xi):
        pt = [0.0] + list(xi)
        c = eval_value(self.center, pt) if self.center is not None else 0.0
        s = eval_value(self.scale, pt) if self.scale is not None else 1.0
        if not (math.isfinite(c) and math.isfinite(s) and s > 0):
            raise QuadratureUnderflow(f"bad quadrature center/scale ({c}, {s}) at xi = {list(xi)}")
        return c, s

    def rule(self, xi):
        """(nodes, log of node weights) for integrating over the sample domain."""
        lo, hi = self.domain
        q = self.quadrature
        kind = q.kind
        if kind == "auto":
            kind = "hermite" if math.isinf(lo) and math.isinf(hi) else "legendre"
        if kind == "hermite":
            if not (math.isinf(lo) and math.isinf(hi)):
                raise ValueError("Hermite quadrature needs the whole real line")
            c, s = self._locate(xi)
            z, logw = _hermite(q.nodes)
            return c + math.sqrt(2.0) * s * z, logw + math.log(math.sqrt(2.0) * s)
        if math.isinf(lo) or math.isinf(hi):
            c, s = self._locate(xi)
            lo = c - 40.0 * s if math.isinf(lo) else lo
            hi = c + 40.0 * s if math.isinf(hi) else hi
        t, w = _legendre(q.panel_order)
        edges = np.linspace(lo, hi, q.panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        x = (mid[:, None] + half[:, None] * t[None, :]).ravel()
        ww = (half[:, None] * w[None, :]).ravel()
        return x, np.log(ww)

    def log_density_jet(self, xi, order=3):
        """l(x_q; xi) at every quadrature node as a jet in xi; also returns log weights."""
        xi = [float(v) for v in xi]
        if len(xi) != self.dim:
            raise ValueError(f"expected {self.dim} parameters, got {len(xi)}")
        x, logw = self.rule(xi)
        lay = layout(self.dim, order)
        variables = [Jet.constant(lay, x)] + [Jet.variable(lay, v, val) for v, val in enumerate(xi)]
        l = evaluate(self.log_density, variables)
        if l.c.ndim == 1:  # density independent of x
            l = Jet(lay, l.c[:, None] * np.ones_like(x)[None, :])
        return l, logw


@dataclass(frozen=True, eq=False)
class FisherData:
    g: np.ndarray
    C: np.ndarray
    dg: np.ndarray = None
    ddg: np.ndarray = None
    dC: np.ndarray = None
    normalization: float = 1.0
    score_mean: np.ndarray = None
    notes: dict = field(default_factory=dict)


def fisher_jets(fam: ParametricFamily, xi, check: bool = True) -> FisherData:
    """g, C and their parameter derivatives (dg, ddg, dC) at ``xi``."""
    l, logw = fam.log_density_jet(xi, order=3)
    m = fam.dim
    if not np.all(np.isfinite(l.value)):
        raise QuadratureUnderflow("log-density is not finite at some quadrature node")
    # p * w as a jet: exp(l + log w); the weights are constants
    pw = (l + Jet.constant(l.lay, logw)).exp()
    if not np.any(pw.value > 0):
        raise QuadratureUnderflow("density underflows at every quadrature node")
    scores = [l.partial(i) for i in range(m)]  # order 2
    pw2 = pw.truncate(2)
    ones = np.ones_like(logw)
    norm = float(pw.value @ ones)
    score_mean = np.array([float(pw2.value @ s.value) for s in scores])
    if check:
        if abs(norm - 1.0) > NORMALIZATION_TOL:
            raise NormalizationError(f"density integrates to {norm!r} at xi = {list(xi)}")
        if np.max(np.abs(score_mean)) > SCORE_TOL * max(1.0, np.max(np.abs(scores[0].value))):
            raise NormalizationError(f"score mean {score_mean} is not zero at xi = {list(xi)}")
    g = np.zeros((m, m))
    dg = np.zeros((m, m, m))
    ddg = np.zeros((m, m, m, m))
    for i in range(m):
        for j in range(i, m):
            gj = (pw2 * scores[i] * scores[j]).weighted_sum(ones)
            g[i, j] = g[j, i] = gj.value
            dg[:, i, j] = dg[:, j, i] = gj.gradient()
            ddg[:, :, i, j] = ddg[:, :, j, i] = gj.hessian()
    C = np.zeros((m, m, m))
    dC = np.zeros((m, m, m, m))
    pw1 = pw.truncate(1)
    s1 = [s.truncate(1) for s in scores]
    for i in range(m):
        for j in range(i, m):
            for k in range(j, m):
                cj = (pw1 * s1[i] * s1[j] * s1[k]).weighted_sum(ones)
                grad = cj.gradient()
                for a, b, c in set(_perms(i, j, k)):
                    C[a, b, c] = cj.value
                    dC[:, a, b, c] = grad
    return FisherData(g, C, dg, ddg, dC, norm, score_mean)


def _perms(i, j, k):
    return [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)]


def fisher_metric(fam: ParametricFamily, xi) -> np.ndarray:
    """g_ij = E[d_i l d_j l]."""
    return fisher_jets(fam, xi).g


def cubic_tensor_family(fam: ParametricFamily, xi) -> np.ndarray:
    """C_ijk = E[d_i l d_j l d_k l]."""
    return fisher_jets(fam, xi).C


def gaussian_closed_forms(mu: float, sigma: float) -> FisherData:
    """Analytic Fisher metric and cubic tensor of N(mu, sigma^2) in (mu, sigma)."""
    sigma = float(sigma)
    if not sigma > 0:
        raise NonpositiveSigma(f"sigma must be positive, got {sigma}")
    g = np.diag([1.0, 2.0]) / sigma**2
    C = np.zeros((2, 2, 2))
    C[0, 0, 1] = C[0, 1, 0] = C[1, 0, 0] = 2.0 / sigma**3
    C[1, 1, 1] = 8.0 / sigma**3
    return FisherData(g, C, notes={"g22": G22_NOTE})


def adjudicate_g22(fam: ParametricFamily = None, xi=(0.0, 1.0)) -> dict:
    """Decide between the two candidate values of g22 by quadrature."""
    fam = fam or FAMILIES["gaussian"]()
    sigma = float(xi[1])
    g22 = float(fisher_metric(fam, xi)[1, 1])
    candidates = {"2/sigma^2": 2.0 / sigma**2, "1/(2 sigma^2)": 1.0 / (2.0 * sigma**2)}
    winner = min(candidates, key=lambda k: abs(candidates[k] - g22))
    return {"g22": g22, "candidates": candidates, "selected": winner, "note": G22_NOTE}


@dataclass(frozen=True, eq=False)
class AlphaStructure:
    alpha: float
    metric: MetricJets
    levi_civita: ConnectionJets
    plus: ConnectionJets
    minus: ConnectionJets
    coupling_residual: float
    curvature_plus: np.ndarray
    fisher: FisherData


def family_alpha_structure(fam: ParametricFamily, xi, alpha: float) -> AlphaStructure:
    """Gamma^(0), Gamma^(alpha) and Gamma^(-alpha) of the Fisher geometry at ``xi``."""
    fd = fisher_jets(fam, xi)
    mj = MetricJets(fd.g, invert_metric(0.5 * (fd.g + fd.g.T)), fd.dg, fd.ddg)
    cj0 = christoffel_lc(mj)
    plus = alpha_connection(mj, cj0, fd.C, fd.dC, alpha)
    minus = alpha_connection(mj, cj0, fd.C, fd.dC, -alpha)
    lp, _ = lower_connection(mj, plus)
    lm, _ = lower_connection(mj, minus)
    res = mj.dg - np.einsum("kji->ijk", lp) - np.einsum("jki->ijk", lm)
    return AlphaStructure(float(alpha), mj, cj0, plus, minus, float(np.max(np.abs(res))),
                         curvature(plus).data, fd)


def gaussian_family(quadrature: Quadrature = None) -> ParametricFamily:
    return ParametricFamily.from_strings(
        "gaussian",
        "-0.5*log(2*pi) - log(sigma) - (x - mu)^2/(2*sigma^2)",
        ["mu", "sigma"],
        center="mu",
        scale="sigma",
        quadrature=quadrature,
    )


FAMILIES = {"gaussian": gaussian_family}


def get_family(name: str, **kwargs) -> ParametricFamily:
    try:
        return FAMILIES[name](**kwargs)
    except KeyError:
        raise KeyError(f"unknown family {name!r}; available: {sorted(FAMILIES)}") from None
