"""Single- and two-connection objects at a chart point.

Index conventions (fixed everywhere in the package):

* ``gamma[k, i, j]`` stores the coefficient Gamma^k_ij and
  nabla_{d_i} d_j = Gamma^k_ji d_k, i.e. the *last* lower index is the
  direction of differentiation: nabla_i V^k = d_i V^k + Gamma^k_ji V^j.
* ``dgamma[a, k, i, j]`` = d_a Gamma^k_ij, ``dg[a, i, j]`` = d_a g_ij and
  ``ddg[a, b, i, j]`` = d_a d_b g_ij.
* Lowered connection coefficients lower the first index:
  Gamma_kij = g_kl Gamma^l_ij.
* Curvature ``R[m, i, j, k]`` = R^m_ijk with R(d_j, d_k) d_i = R^m_ijk d_m,
  and the lowered form is R_ijkl = g_im R^m_jkl.
* Brackets carry weight 1/k!.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import SingularMetric
from .expr import Expr, parse_expr
from .jet import eval_many
from .tensor import DenseTensor


@dataclass(frozen=True, eq=False)
class MetricJets:
    g: np.ndarray
    g_inv: np.ndarray
    dg: np.ndarray
    ddg: np.ndarray

    @property
    def dim(self):
        return self.g.shape[0]

    @property
    def dg_inv(self):
        """d_a g^ij = -g^im (d_a g_mn) g^nj."""
        return -np.einsum("im,amn,nj->aij", self.g_inv, self.dg, self.g_inv)

    @classmethod
    def from_arrays(cls, g, dg=None, ddg=None):
        g = np.asarray(g, dtype=float)
        n = g.shape[0]
        dg = np.zeros((n, n, n)) if dg is None else np.asarray(dg, dtype=float)
        ddg = np.zeros((n, n, n, n)) if ddg is None else np.asarray(ddg, dtype=float)
        return cls(g, invert_metric(g), dg, ddg)

    def metric_tensor(self) -> DenseTensor:
        return DenseTensor(self.g, "ll")

    def inverse_tensor(self) -> DenseTensor:
        return DenseTensor(self.g_inv, "uu")


@dataclass(frozen=True, eq=False)
class ConnectionJets:
    gamma: np.ndarray
    dgamma: np.ndarray

    @property
    def dim(self):
        return self.gamma.shape[0]

    @classmethod
    def constant(cls, gamma):
        gamma = np.asarray(gamma, dtype=float)
        return cls(gamma, np.zeros((gamma.shape[0],) + gamma.shape))

    def __add__(self, other):
        return ConnectionJets(self.gamma + other.gamma, self.dgamma + other.dgamma)

    def __sub__(self, other):
        return ConnectionJets(self.gamma - other.gamma, self.dgamma - other.dgamma)


def invert_metric(g: np.ndarray) -> np.ndarray:
    if not np.array_equal(g, g.T):
        raise SingularMetric("metric is not symmetric")
    if abs(np.linalg.det(g)) <= 1e-10:
        raise SingularMetric(f"|det g| <= 1e-10 (det = {np.linalg.det(g):.3e})")
    g_inv = np.linalg.inv(g)
    g_inv = 0.5 * (g_inv + g_inv.T)
    if np.max(np.abs(g @ g_inv - np.eye(g.shape[0]))) > 1e-12 * max(1.0, np.linalg.cond(g)):
        raise SingularMetric("metric is too ill-conditioned to invert")
    return g_inv


class MetricField:
    """Symmetric metric g_ij given by expressions; only i <= j is read."""

    def __init__(self, entries: Sequence[Sequence[Expr]], params: Mapping[str, float] = None):
        n = len(entries)
        if any(len(row) != n for row in entries):
            raise ValueError("metric grid must be square")
        self.dim = n
        self.entries = tuple(tuple(row) for row in entries)
        self.params = dict(params or {})

    @classmethod
    def parse(cls, grid, coords, params=None):
        names = list((params or {}).keys())
        return cls([[parse_expr(s, coords, names) for s in row] for row in grid], params)

    def upper(self):
        return [(i, j) for i in range(self.dim) for j in range(i, self.dim)]

    def jets(self, point) -> MetricJets:
        n = self.dim
        pairs = self.upper()
        values = eval_many([self.entries[i][j] for i, j in pairs], point, self.params)
        g = np.zeros((n, n))
        dg = np.zeros((n, n, n))
        ddg = np.zeros((n, n, n, n))
        for (i, j), jet in zip(pairs, values):
            g[i, j] = g[j, i] = jet.value
            grad, hess = jet.gradient(), jet.hessian()
            dg[:, i, j] = dg[:, j, i] = grad
            ddg[:, :, i, j] = ddg[:, :, j, i] = hess
        return MetricJets(g, invert_metric(g), dg, ddg)


def lower_connection(mj: MetricJets, cj: ConnectionJets):
    """(Gamma_kij, d_a Gamma_kij) with the first index lowered."""
    low = np.einsum("kl,lij->kij", mj.g, cj.gamma)
    dlow = np.einsum("akl,lij->akij", mj.dg, cj.gamma) + np.einsum("kl,alij->akij", mj.g, cj.dgamma)
    return low, dlow


def raise_connection(mj: MetricJets, low: np.ndarray, dlow: np.ndarray) -> ConnectionJets:
    gamma = np.einsum("kl,lij->kij", mj.g_inv, low)
    dgamma = np.einsum("akl,lij->akij", mj.dg_inv, low) + np.einsum("kl,alij->akij", mj.g_inv, dlow)
    return ConnectionJets(gamma, dgamma)


def christoffel_lc(mj: MetricJets) -> ConnectionJets:
    """Levi-Civita connection with its first derivatives, both from metric jets."""
    dg, ddg = mj.dg, mj.ddg
    # Gamma_lij = (d_i g_lj + d_j g_li - d_l g_ij) / 2
    low = 0.5 * (np.einsum("ilj->lij", dg) + np.einsum("jli->lij", dg) - dg)
    dlow = 0.5 * (
        np.einsum("ailj->alij", ddg) + np.einsum("ajli->alij", ddg) - ddg
    )
    return raise_connection(mj, low, dlow)


def torsion(cj: ConnectionJets):
    """T^m_ij = Gamma^m_ji - Gamma^m_ij and S_ij^k = Gamma^k_[ij] = -T^k_ij / 2.

    T is stored as [m, i, j] ("ull"); S as [i, j, k] ("llu").
    """
    gamma = cj.gamma
    t = np.swapaxes(gamma, 1, 2) - gamma
    s = np.transpose(-0.5 * t, (1, 2, 0))
    return DenseTensor(t, "ull"), DenseTensor(s, "llu")


def nonmetricity(mj: MetricJets, cj: ConnectionJets) -> DenseTensor:
    """Q_ijk = d_i g_jk - Gamma^l_ji g_lk - Gamma^l_ki g_jl."""
    low, _ = lower_connection(mj, cj)
    q = mj.dg - np.einsum("kji->ijk", low) - np.einsum("jki->ijk", low)
    return DenseTensor(q, "lll")


def nonmetricity_jets(mj: MetricJets, cj: ConnectionJets):
    """Q_ijk and d_a Q_ijk as arrays."""
    low, dlow = lower_connection(mj, cj)
    q = mj.dg - np.einsum("kji->ijk", low) - np.einsum("jki->ijk", low)
    dq = mj.ddg - np.einsum("akji->aijk", dlow) - np.einsum("ajki->aijk", dlow)
    return q, dq


def distortion(mj: MetricJets, Q: DenseTensor, S: DenseTensor) -> DenseTensor:
    """N^m_ij = g^ml (Q_lij - Q_jli - Q_ijl)/2 - g^ml (S_lij + S_lji - S_ijl).

    ``S`` may be passed as S_ij^k ("llu"); it is lowered on its last slot.
    """
    q = Q.data
    s = S.data
    if S.variance == "llu":
        s = np.einsum("ijm,mk->ijk", s, mj.g)
    qpart = q - np.einsum("jli->lij", q) - np.einsum("ijl->lij", q)
    spart = s + np.einsum("lji->lij", s) - np.einsum("ijl->lij", s)
    n = np.einsum("ml,lij->mij", mj.g_inv, 0.5 * qpart - spart)
    return DenseTensor(n, "ull")


def curvature(cj: ConnectionJets) -> DenseTensor:
    """R^m_ijk = d_j G^m_ik - d_k G^m_ij + G^m_lj G^l_ik - G^m_lk G^l_ij."""
    g, dg = cj.gamma, cj.dgamma
    deriv = np.einsum("jmik->mijk", dg)
    quad = np.einsum("mlj,lik->mijk", g, g)
    r = (deriv - np.swapaxes(deriv, 2, 3)) + (quad - np.swapaxes(quad, 2, 3))
    return DenseTensor(r, "ulll")


def lower_curvature(mj: MetricJets, R: DenseTensor) -> DenseTensor:
    """R_ijkl = g_im R^m_jkl."""
    return DenseTensor(np.einsum("im,mjkl->ijkl", mj.g, R.data), "llll")


def ricci_scalar(R: DenseTensor, mj: MetricJets) -> float:
    """Ric = R^m_imj g^ij."""
    return float(np.einsum("mimj,ij->", R.data, mj.g_inv))


def lc_covariant_derivative_distortion(cj0: ConnectionJets, N: np.ndarray, dN: np.ndarray) -> np.ndarray:
    """D[k, m, j, l] = nabla0_k N^m_jl for a (1,2) tensor N^m_jl."""
    g0 = cj0.gamma
    return (
        dN
        + np.einsum("mak,ajl->kmjl", g0, N)
        - np.einsum("ajk,mal->kmjl", g0, N)
        - np.einsum("alk,mja->kmjl", g0, N)
    )


def post_riemannian_curvature(cj0: ConnectionJets, N, dN) -> DenseTensor:
    """R^m_jkl = R0^m_jkl + 2 nabla0_[k N^m_|j|l] + 2 N^m_n[k N^n_|j|l]."""
    N = N.data if isinstance(N, DenseTensor) else np.asarray(N)
    dN = np.asarray(dN)
    r0 = curvature(cj0).data
    cov = lc_covariant_derivative_distortion(cj0, N, dN)
    lin = np.einsum("kmjl->mjkl", cov)
    lin = lin - np.swapaxes(lin, 2, 3)
    quad = np.einsum("mnk,njl->mjkl", N, N)
    quad = quad - np.swapaxes(quad, 2, 3)
    return DenseTensor(r0 + lin + quad, "ulll")


def difference_tensor(cj1: ConnectionJets, cj2: ConnectionJets) -> DenseTensor:
    """K^l_ij = Gamma1^l_ij - Gamma2^l_ij."""
    if cj1.dim != cj2.dim:
        raise ValueError("connections live on charts of different dimension")
    return DenseTensor(cj1.gamma - cj2.gamma, "ull")


def convex_combination(cj1: ConnectionJets, cj2: ConnectionJets, t: float) -> ConnectionJets:
    t = float(t)
    return ConnectionJets(t * cj1.gamma + (1.0 - t) * cj2.gamma, t * cj1.dgamma + (1.0 - t) * cj2.dgamma)


def _kk_wedge(K):
    """2 K^m_l[j K^l_|i|k] laid out as [m, i, j, k]."""
    kk = np.einsum("mlj,lik->mijk", K, K)
    return kk - np.swapaxes(kk, 2, 3)


def combination_curvature_residual(cj1, cj2, t, mj: MetricJets = None):
    """Residuals of the curvature and Ricci identities for t*G1 + (1-t)*G2.

    Returns ``(riemann_residual, ricci_residual)``; the Ricci part needs the
    metric and is ``None`` without it.
    """
    t = float(t)
    K = difference_tensor(cj1, cj2).data
    r = curvature(convex_combination(cj1, cj2, t)).data
    r1, r2 = curvature(cj1).data, curvature(cj2).data
    riemann = r - t * r1 - (1 - t) * r2 + t * (1 - t) * _kk_wedge(K)
    ricci = None
    if mj is not None:
        gi = mj.g_inv
        ric = lambda a: float(np.einsum("mimj,ij->", a, gi))
        k_up = np.einsum("ijk,ja,kb->iab", K, gi, gi)
        k_low = np.einsum("jc,cki->jki", mj.g, K)
        quad = np.einsum("iji,jkl,kl->", K, K, gi) - np.einsum("ijk,jki->", k_up, k_low)
        ricci = abs(ric(r) - t * ric(r1) - (1 - t) * ric(r2) + t * (1 - t) * quad)
    return float(np.max(np.abs(riemann))), ricci


def covariant_hessian(cj: ConnectionJets, grad_f, hess_f) -> np.ndarray:
    """H[i, j] = nabla_i nabla_j f = d_i d_j f - Gamma^l_ji d_l f."""
    return np.asarray(hess_f) - np.einsum("lji,l->ij", cj.gamma, np.asarray(grad_f))


def evaluate_field3(exprs, point, params=None):
    """Evaluate an [n][n][n] grid of expressions; returns (values, d_a values)."""
    n = len(exprs)
    flat = [exprs[a][b][c] for a in range(n) for b in range(n) for c in range(n)]
    jets = eval_many(flat, point, params, order=1)
    vals = np.array([j.value for j in jets]).reshape(n, n, n)
    grads = np.array([j.gradient() for j in jets]).reshape(n, n, n, n)
    return vals, np.moveaxis(grads, 3, 0)
