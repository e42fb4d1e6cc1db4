"""Mutual tensors of two connections and F-linearity checks of mutual curvatures."""
from __future__ import annotations

import numpy as np

from .expr import Expr
from .geometry import ConnectionJets, MetricJets, nonmetricity
from .jet import VectorFieldSpec, eval_jet2
from .tensor import DenseTensor


def mutual_nonmetricity(mj: MetricJets, cj1: ConnectionJets, cj2: ConnectionJets) -> DenseTensor:
    """W_ijk = (nabla1_i g_jk + nabla2_i g_jk) / 2."""
    return DenseTensor(0.5 * (nonmetricity(mj, cj1).data + nonmetricity(mj, cj2).data), "lll")


def mutual_torsion(cj1: ConnectionJets, cj2: ConnectionJets) -> DenseTensor:
    """M^i_jk = Gamma1^i_jk - Gamma2^i_kj."""
    return DenseTensor(cj1.gamma - np.swapaxes(cj2.gamma, 1, 2), "ull")


def _quad(a, b):
    """a^m_li b^l_kj laid out as [m, k, i, j]."""
    return np.einsum("mli,lkj->mkij", a, b)


def _deriv(dgamma):
    """d_i Gamma^m_kj laid out as [m, k, i, j]."""
    return np.einsum("imkj->mkij", dgamma)


def _alt(x):
    return x - np.swapaxes(x, 2, 3)


def mutual_curvature(cj1: ConnectionJets, cj2: ConnectionJets) -> DenseTensor:
    """R^m_kij of the pair, stored [m, k, i, j], with R(d_i, d_j) d_k = R^m_kij d_m.

    d_[i G2^m_|k|j] + d_[i G1^m_|k|j] + G2^l_k[j G1^m_|l|i] + G1^l_k[j G2^m_|l|i].
    Both sums are formed symmetrically so swapping the connections is bit-exact.
    """
    d = _alt(_deriv(cj1.dgamma) + _deriv(cj2.dgamma))
    q = _alt(_quad(cj1.gamma, cj2.gamma) + _quad(cj2.gamma, cj1.gamma))
    return DenseTensor(0.5 * d + 0.5 * q, "ulll")


def single_curvature(cj: ConnectionJets) -> DenseTensor:
    """The Riemann tensor assembled with the same arithmetic as :func:`mutual_curvature`."""
    return DenseTensor(_alt(_deriv(cj.dgamma)) + _alt(_quad(cj.gamma, cj.gamma)), "ulll")


def mutual_curvature_regrouped(cj1: ConnectionJets, cj2: ConnectionJets) -> DenseTensor:
    """(R1 + R2)/2 + K^l_k[i K^m_|l|j]."""
    K = cj1.gamma - cj2.gamma
    kk = np.einsum("lki,mlj->mkij", K, K)
    r1, r2 = single_curvature(cj1).data, single_curvature(cj2).data
    return DenseTensor(0.5 * (r1 + r2) + 0.5 * _alt(kk), "ulll")


def curvature_dual_residual(cj1: ConnectionJets, cj2: ConnectionJets) -> DenseTensor:
    """Left-hand side of the curvature-dual condition; zero iff the pair is curvature dual."""
    return mutual_curvature(cj1, cj2)


# -- semantic (vector-field) evaluation ---------------------------------------------


def _nabla_jet(cj, X, Z):
    """W = nabla_X Z as (value[k], grad[k][a]); X, Z are (val, grad, hess) triples."""
    xv, xg, _ = X
    zv, zg, zh = Z
    gam, dgam = cj.gamma, cj.dgamma
    inner = zg + np.einsum("kji,j->ki", gam, zv)  # nabla_i Z^k at [k, i]
    val = inner @ xv
    d_inner = zh + np.einsum("akji,j->kia", dgam, zv) + np.einsum("kji,ja->kia", gam, zg)
    grad = np.einsum("ia,ki->ka", xg, inner) + np.einsum("kia,i->ka", d_inner, xv)
    return val, grad


def _nabla_value(cj, xv, W):
    wv, wg = W
    return (wg + np.einsum("kji,j->ki", cj.gamma, wv)) @ xv


def _bracket(X, Y):
    xv, xg, _ = X
    yv, yg, _ = Y
    return yg @ xv - xg @ yv


def _second(cj_outer, cj_inner, A, B, Z):
    """nabla^outer_A nabla^inner_B Z at the point."""
    return _nabla_value(cj_outer, A[0], _nabla_jet(cj_inner, B, Z))


def _first(cj, v, Z):
    zv, zg, _ = Z
    return (zg + np.einsum("kji,j->ki", cj.gamma, zv)) @ v


def mutual_curvature_paper(cj1, cj2, X, Y, Z):
    """Symmetrised definition (the tensorial one)."""
    br = _bracket(X, Y)
    return 0.5 * (
        _second(cj1, cj2, X, Y, Z) - _second(cj1, cj2, Y, X, Z)
        + _second(cj2, cj1, X, Y, Z) - _second(cj2, cj1, Y, X, Z)
        - _first(cj1, br, Z) - _first(cj2, br, Z)
    )


def mutual_curvature_puechmorel(cj1, cj2, X, Y, Z):
    """nabla1_X nabla2_Y Z - nabla1_Y nabla2_X Z - nabla1_[X,Y] Z."""
    return _second(cj1, cj2, X, Y, Z) - _second(cj1, cj2, Y, X, Z) - _first(cj1, _bracket(X, Y), Z)


def mutual_curvature_calin(cj_alpha, cj_beta, X, Y, Z):
    """nabla^a_X nabla^b_Y Z - nabla^b_Y nabla^a_X Z - nabla^a_[X,Y] Z."""
    return (
        _second(cj_alpha, cj_beta, X, Y, Z)
        - _second(cj_beta, cj_alpha, Y, X, Z)
        - _first(cj_alpha, _bracket(X, Y), Z)
    )


DEFINITIONS = {
    "paper": mutual_curvature_paper,
    "puechmorel": mutual_curvature_puechmorel,
    "calin": mutual_curvature_calin,
}

# argument that gets multiplied by f for each definition
DEFAULT_SCALED_SLOT = {"paper": "Z", "puechmorel": "Z", "calin": "Y"}


def flinearity_defect(def_id: str, X: VectorFieldSpec, Y: VectorFieldSpec, Z: VectorFieldSpec,
                      f: Expr, cj1: ConnectionJets, cj2: ConnectionJets, point, params=None,
                      slot: str = None) -> dict:
    """Compare D(..., f*arg, ...) - f*D(...) against the predicted non-tensorial terms.

    The remainder and the prediction are both evaluated from exact jets of the
    vector fields and of f.  For the symmetrised definition the prediction is zero.
    """
    if def_id not in DEFINITIONS:
        raise ValueError(f"unknown definition {def_id!r}; expected one of {sorted(DEFINITIONS)}")
    slot = slot or DEFAULT_SCALED_SLOT[def_id]
    if slot not in ("X", "Y", "Z"):
        raise ValueError("slot must be X, Y or Z")
    fn = DEFINITIONS[def_id]
    point = [float(x) for x in point]
    fields = {"X": X, "Y": Y, "Z": Z}
    jets = {k: v.jets(point, params) for k, v in fields.items()}
    scaled = dict(jets)
    scaled[slot] = fields[slot].scaled(f).jets(point, params)
    fj = eval_jet2(f, point, params)

    base = fn(cj1, cj2, jets["X"], jets["Y"], jets["Z"])
    remainder = fn(cj1, cj2, scaled["X"], scaled["Y"], scaled["Z"]) - fj.value * base

    xf = float(fj.grad @ jets["X"][0])
    yf = float(fj.grad @ jets["Y"][0])
    if def_id == "puechmorel" and slot == "Z":
        Zj = jets["Z"]
        predicted = (yf * (_first(cj1, jets["X"][0], Zj) - _first(cj2, jets["X"][0], Zj))
                     + xf * (_first(cj2, jets["Y"][0], Zj) - _first(cj1, jets["Y"][0], Zj)))
    elif def_id == "calin" and slot == "Y":
        Zj = jets["Z"]
        predicted = xf * (_first(cj2, jets["Y"][0], Zj) - _first(cj1, jets["Y"][0], Zj))
    elif def_id == "paper":
        predicted = np.zeros_like(remainder)
    else:
        raise ValueError(f"no prediction for {def_id} with {slot} scaled")
    return {
        "definition": def_id,
        "scaled": slot,
        "remainder": remainder,
        "predicted": predicted,
        "remainder_max": float(np.max(np.abs(remainder))),
        "residual": float(np.max(np.abs(remainder - predicted))),
    }
