"""Connection fields: expression-defined rules that produce ConnectionJets at a point."""
from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .expr import Expr, Neg, Num, parse_expr
from .geometry import (
    ConnectionJets,
    MetricField,
    MetricJets,
    christoffel_lc,
    evaluate_field3,
)
from .tensor import levi_civita_symbol


class ConnectionField:
    """Base class.  Subclasses implement :meth:`jets`."""

    metric: MetricField = None

    def jets(self, point, mj: MetricJets = None) -> ConnectionJets:
        raise NotImplementedError

    def distortion_jets(self, point, mj: MetricJets):
        """(N^m_ij, d_a N^m_ij) relative to the Levi-Civita connection of ``mj``."""
        cj = self.jets(point, mj)
        cj0 = christoffel_lc(mj)
        return cj.gamma - cj0.gamma, cj.dgamma - cj0.dgamma


class ExplicitConnection(ConnectionField):
    def __init__(self, gamma: Sequence, params: Mapping[str, float] = None):
        self.gamma = gamma
        self.params = dict(params or {})

    def jets(self, point, mj=None):
        vals, grads = evaluate_field3(self.gamma, point, self.params)
        return ConnectionJets(vals, grads)


class LeviCivitaConnection(ConnectionField):
    def __init__(self, metric: MetricField):
        self.metric = metric

    def jets(self, point, mj=None):
        mj = mj if mj is not None else self.metric.jets(point)
        return christoffel_lc(mj)

    def distortion_jets(self, point, mj):
        n = mj.dim
        return np.zeros((n, n, n)), np.zeros((n, n, n, n))


class DistortedConnection(ConnectionField):
    """Gamma = Gamma0 + N with N given raised (N^k_ij) or lowered (N_kij)."""

    def __init__(self, metric: MetricField, distortion: Sequence, lowered: bool = False,
                 params: Mapping[str, float] = None):
        self.metric = metric
        self.distortion = distortion
        self.lowered = lowered
        self.params = dict(params or {})

    def distortion_jets(self, point, mj):
        vals, grads = evaluate_field3(self.distortion, point, self.params)
        if not self.lowered:
            return vals, grads
        n_up = np.einsum("kl,lij->kij", mj.g_inv, vals)
        dn_up = np.einsum("akl,lij->akij", mj.dg_inv, vals) + np.einsum("kl,alij->akij", mj.g_inv, grads)
        return n_up, dn_up

    def jets(self, point, mj=None):
        mj = mj if mj is not None else self.metric.jets(point)
        cj0 = christoffel_lc(mj)
        n, dn = self.distortion_jets(point, mj)
        return ConnectionJets(cj0.gamma + n, cj0.dgamma + dn)


def three_form_grid(f: Expr, n: int = 3):
    """Lowered A_kij = f * eps_kij as an expression grid (n = 3 only)."""
    if n != 3:
        raise ValueError("a single generating function only parameterises 3-forms in n = 3")
    eps = levi_civita_symbol(3).data
    zero = Num(0.0)
    return [[[f if eps[k, i, j] > 0 else (Neg(f) if eps[k, i, j] < 0 else zero)
              for j in range(3)] for i in range(3)] for k in range(3)]


class TorsionDualField(ConnectionField):
    """Gamma*^k_ij = Gamma^k_ji of another connection field."""

    def __init__(self, base: ConnectionField):
        self.base = base
        self.metric = base.metric

    def jets(self, point, mj=None):
        cj = self.base.jets(point, mj)
        return ConnectionJets(np.swapaxes(cj.gamma, 1, 2).copy(), np.swapaxes(cj.dgamma, 2, 3).copy())


class NonmetricDualField(ConnectionField):
    """Classical dual d_i g_jk = Gamma_kji + Gamma*_jki of another connection field."""

    def __init__(self, base: ConnectionField, metric: MetricField):
        self.base = base
        self.metric = metric

    def jets(self, point, mj=None):
        from .duality import nonmetric_dual_jets

        mj = mj if mj is not None else self.metric.jets(point)
        return nonmetric_dual_jets(mj, self.base.jets(point, mj))


def parse_grid3(grid, coords, params=()):
    return [[[parse_expr(s, coords, list(params)) for s in row] for row in plane] for plane in grid]
