"""Dual connections: classical (non-metric), generalized-t, alpha family and torsion duals."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AsymmetricC,
    DegenerateT,
    DimensionTooSmall,
    NotLastPairAntisymmetric,
    NotMetric,
    NotTorsionFree,
    WrongSymmetryClass,
)
from .geometry import (
    ConnectionJets,
    MetricJets,
    christoffel_lc,
    curvature,
    lc_covariant_derivative_distortion,
    lower_connection,
    lower_curvature,
    nonmetricity,
    raise_connection,
    ricci_scalar,
    torsion,
)
from .tensor import DenseTensor, antisymmetrize, symmetrize

SYMMETRY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class DualPair:
    primal: ConnectionJets
    dual: ConnectionJets
    kind: str  # nonmetric | torsion | generalized | curvature-candidate
    residual: float
    t: float = None
    notes: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class CubicTensor:
    C: DenseTensor
    dual_residual: float  # max |nabla* g + C|
    symmetry_residual: float


@dataclass(frozen=True, eq=False)
class ThreeForm:
    A: DenseTensor
    generator: object = None
    residuals: dict = field(default_factory=dict)


def _max(a):
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def _first_pair_asymmetry(mj, cj):
    low, _ = lower_connection(mj, cj)
    return _max(low - np.swapaxes(low, 0, 1))


def dual_relation_array(mj, cj, dual):
    """d_i g_jk - Gamma_kji - Gamma*_jki at [i, j, k]."""
    low, _ = lower_connection(mj, cj)
    low_s, _ = lower_connection(mj, dual)
    return mj.dg - np.einsum("kji->ijk", low) - np.einsum("jki->ijk", low_s)


def _dual_relation_residual(mj, cj, dual):
    return _max(dual_relation_array(mj, cj, dual))


def nonmetric_dual_jets(mj: MetricJets, cj: ConnectionJets) -> ConnectionJets:
    """Gamma*_jki = d_i g_jk - Gamma_kji, raised on the first index."""
    low, dlow = lower_connection(mj, cj)
    dual_low = np.einsum("ijk->jki", mj.dg) - np.einsum("kji->jki", low)
    ddual_low = np.einsum("aijk->ajki", mj.ddg) - np.einsum("akji->ajki", dlow)
    return raise_connection(mj, dual_low, ddual_low)


def nonmetric_dual(mj: MetricJets, cj: ConnectionJets) -> DualPair:
    dual = nonmetric_dual_jets(mj, cj)
    asym = _first_pair_asymmetry(mj, cj)
    notes = {
        "first_pair_asymmetry": asym,
        "first_pair_asymmetric": asym > SYMMETRY_TOL,
    }
    return DualPair(cj, dual, "nonmetric", _dual_relation_residual(mj, cj, dual), notes=notes)


def cubic_tensor(mj: MetricJets, pair: DualPair, tol: float = SYMMETRY_TOL) -> CubicTensor:
    """C = nabla g of the primal; checks torsion-freeness, nabla* g = -C and total symmetry."""
    for name, cj in (("primal", pair.primal), ("dual", pair.dual)):
        s = torsion(cj)[1].max_abs()
        if s > tol:
            raise NotTorsionFree(f"{name} connection has max |S| = {s:.3e}")
    C = nonmetricity(mj, pair.primal)
    C_dual = nonmetricity(mj, pair.dual)
    sym = _max(C.data - symmetrize(C, (0, 1, 2)).data)
    if sym > tol:
        raise AsymmetricC(f"cubic tensor symmetry residual {sym:.3e}")
    return CubicTensor(C, _max(C_dual.data + C.data), sym)


def alpha_connection(mj: MetricJets, cj0: ConnectionJets, C, dC, alpha: float) -> ConnectionJets:
    """Gamma^(alpha)_kij = Gamma0_kij - (alpha/2) C_kij."""
    if isinstance(C, CubicTensor):
        C = C.C
    C = C.data if isinstance(C, DenseTensor) else np.asarray(C)
    low0, dlow0 = lower_connection(mj, cj0)
    a = 0.5 * float(alpha)
    return raise_connection(mj, low0 - a * C, dlow0 - a * np.asarray(dC))


def generalized_dual(mj: MetricJets, cj: ConnectionJets, t: float) -> DualPair:
    """Solve d_i g_jk = 2t Gamma_(kj)i + 2(1-t) Gamma*_(kj)i.

    Only the part of Gamma*_jki symmetric in (j, k) is fixed by the relation;
    the antisymmetric part is copied from Gamma, which makes t = 1/2 agree
    with :func:`nonmetric_dual`.
    """
    t = float(t)
    if t == 1.0 or t == 0.0:
        raise DegenerateT(f"t = {t} does not determine a dual")
    low, dlow = lower_connection(mj, cj)
    sym = 0.5 * (low + np.swapaxes(low, 0, 1))
    anti = low - sym
    dsym = 0.5 * (dlow + np.swapaxes(dlow, 1, 2))
    danti = dlow - dsym
    dg_jki = np.einsum("ijk->jki", mj.dg)
    ddg_jki = np.einsum("aijk->ajki", mj.ddg)
    dual_sym = (dg_jki - 2 * t * sym) / (2 * (1 - t))
    ddual_sym = (ddg_jki - 2 * t * dsym) / (2 * (1 - t))
    dual = raise_connection(mj, dual_sym + anti, ddual_sym + danti)
    comb = ConnectionJets(t * cj.gamma + (1 - t) * dual.gamma, t * cj.dgamma + (1 - t) * dual.dgamma)
    residual = nonmetricity(mj, comb).max_abs()
    notes = {"first_pair_asymmetry": _first_pair_asymmetry(mj, cj)}
    return DualPair(cj, dual, "generalized", residual, t=t, notes=notes)


def torsion_dual(cj: ConnectionJets) -> DualPair:
    """Gamma*^k_ij = Gamma^k_ji; no metric involved."""
    dual = ConnectionJets(np.swapaxes(cj.gamma, 1, 2).copy(), np.swapaxes(cj.dgamma, 2, 3).copy())
    mutual = cj.gamma - np.swapaxes(dual.gamma, 1, 2)
    return DualPair(cj, dual, "torsion", _max(mutual))


def _is_metric(mj, cj, tol):
    return nonmetricity(mj, cj).max_abs() <= tol


def torsion_dual_properties(mj: MetricJets, pair: DualPair, tol: float = SYMMETRY_TOL) -> dict:
    """Residuals of the torsion-dual identities.

    ``torsion_sum``      max |T + T*|
    ``s_sum``            max |S_ijk + S*_ijk| (slotwise; the lowered form of T + T* = 0)
    ``mean_minus_lc``    max |(Gamma + Gamma*)/2 - Gamma0|, or "not-applicable"
                         unless both connections are metric
    ``distortion_swap``  max |N*_ikj - N_ijk|
    """
    if pair.kind != "torsion":
        raise ValueError("expected a torsion dual pair")
    T, S = torsion(pair.primal)
    Ts, Ss = torsion(pair.dual)
    cj0 = christoffel_lc(mj)
    arrays = {"torsion_sum": T.data + Ts.data, "s_sum": S.data + Ss.data}
    report = {"torsion_sum": _max(arrays["torsion_sum"]), "s_sum": _max(arrays["s_sum"]), "arrays": arrays}
    if _is_metric(mj, pair.primal, tol) and _is_metric(mj, pair.dual, tol):
        mean = 0.5 * (pair.primal.gamma + pair.dual.gamma)
        arrays["mean_minus_lc"] = mean - cj0.gamma
        report["mean_minus_lc"] = _max(arrays["mean_minus_lc"])
    else:
        report["mean_minus_lc"] = "not-applicable"
    n_low = np.einsum("im,mjk->ijk", mj.g, pair.primal.gamma - cj0.gamma)
    ns_low = np.einsum("im,mjk->ijk", mj.g, pair.dual.gamma - cj0.gamma)
    arrays["distortion_swap"] = np.swapaxes(ns_low, 1, 2) - n_low
    report["distortion_swap"] = _max(arrays["distortion_swap"])
    return report


def theorem1_decompose(mj: MetricJets, cj: ConnectionJets, tol: float = SYMMETRY_TOL) -> ThreeForm:
    """Recover the 3-form A with Gamma = Gamma0 + A and Gamma* = Gamma0 - A."""
    n = mj.dim
    if n < 3:
        raise DimensionTooSmall(f"a 3-form needs n >= 3 (got n = {n})")
    cj0 = christoffel_lc(mj)
    n_low = np.einsum("im,mjk->ijk", mj.g, cj.gamma - cj0.gamma)
    last_pair = _max(0.5 * (n_low + np.swapaxes(n_low, 1, 2)))
    if last_pair > tol:
        raise NotLastPairAntisymmetric(f"max |N_i(jk)| = {last_pair:.3e}")
    q = nonmetricity(mj, cj).max_abs()
    if q > tol:
        raise NotMetric(f"max |Q| = {q:.3e}")
    A = DenseTensor(n_low, "lll")
    low, _ = lower_connection(mj, cj)
    low0, _ = lower_connection(mj, cj0)
    dual = torsion_dual(cj).dual
    low_s, _ = lower_connection(mj, dual)
    residuals = {
        "antisymmetry": _max(A.data - antisymmetrize(A, (0, 1, 2)).data),
        "primal": _max(low - (low0 + A.data)),
        "dual": _max(low_s - (low0 - A.data)),
    }
    return ThreeForm(A, residuals=residuals)


# Sign variants of R_ijkl + s_join R*_jikl = 2 (1 + s_inner (-1)^p) nabla0_[k N_|ij|l].
LEMMA_VARIANTS = ((1, -1), (1, 1), (-1, -1), (-1, 1))


def lemma_variant_label(variant) -> str:
    s_join, s_inner = variant
    join = "+" if s_join > 0 else "-"
    inner = "+" if s_inner > 0 else "-"
    return f"R_ijkl {join} R*_jikl = 2(1 {inner} (-1)^p) nabla0_[k N_|ij|l]"


def lemma_curvature_relation(mj: MetricJets, cj0: ConnectionJets, N, dN, p: int,
                             lock_tol: float = 1e-9, symmetry_tol: float = SYMMETRY_TOL) -> dict:
    """Sweep the four sign variants of the curvature relation for Gamma0 +/- N.

    ``N``/``dN`` are N^m_jk and d_a N^m_jk.  The report lists every variant's
    max-abs residual and the unique variant below ``lock_tol`` (``None`` when
    zero or several pass, e.g. for N = 0).
    """
    if p not in (0, 1):
        raise ValueError("p must be 0 or 1")
    N = np.asarray(N)
    dN = np.asarray(dN)
    n_low = np.einsum("im,mjk->ijk", mj.g, N)
    sym_res = _max(n_low - (-1) ** p * np.swapaxes(n_low, 0, 1))
    if sym_res > symmetry_tol:
        raise WrongSymmetryClass(f"N_ijk != (-1)^{p} N_jik (residual {sym_res:.3e})")
    plus = ConnectionJets(cj0.gamma + N, cj0.dgamma + dN)
    minus = ConnectionJets(cj0.gamma - N, cj0.dgamma - dN)
    R = lower_curvature(mj, curvature(plus)).data
    Rs = lower_curvature(mj, curvature(minus)).data
    Rs_jikl = np.swapaxes(Rs, 0, 1)
    cov = lc_covariant_derivative_distortion(cj0, N, dN)  # [k, m, j, l]
    cov_low = np.einsum("im,kmjl->ijkl", mj.g, cov)  # nabla0_k N_ijl at [i, j, k, l]
    D = cov_low - np.swapaxes(cov_low, 2, 3)  # 2 nabla0_[k N_|ij|l]
    residuals, arrays = {}, {}
    for s_join, s_inner in LEMMA_VARIANTS:
        coef = 1 + s_inner * (-1) ** p
        arrays[(s_join, s_inner)] = R + s_join * Rs_jikl - coef * D
        residuals[(s_join, s_inner)] = _max(arrays[(s_join, s_inner)])
    passing = [v for v, r in residuals.items() if r < lock_tol]
    locked = passing[0] if len(passing) == 1 else None
    return {
        "p": p,
        "symmetry_residual": sym_res,
        "residuals": residuals,
        "residual_arrays": arrays,
        "passing": passing,
        "locked": locked,
        "locked_label": lemma_variant_label(locked) if locked else None,
        "derivative_term_max": _max(D),
    }


def theorem3_ricci_equality(mj: MetricJets, pair: DualPair, tol: float = SYMMETRY_TOL) -> float:
    """|Ric(nabla) - Ric(nabla*)| for a metric torsion-dual pair."""
    if pair.kind != "torsion":
        raise ValueError("expected a torsion dual pair")
    for name, cj in (("primal", pair.primal), ("dual", pair.dual)):
        q = nonmetricity(mj, cj).max_abs()
        if q > tol:
            raise NotMetric(f"{name} connection has max |Q| = {q:.3e}")
    return abs(ricci_scalar(curvature(pair.primal), mj) - ricci_scalar(curvature(pair.dual), mj))


def both_senses_constraint(mj: MetricJets, cj: ConnectionJets) -> dict:
    """Residuals of the conditions for a dual in both the metric and torsion sense."""
    cj0 = christoffel_lc(mj)
    n_low = np.einsum("im,mjk->ijk", mj.g, cj.gamma - cj0.gamma)
    dual = torsion_dual(cj).dual
    ns_low = np.einsum("im,mjk->ijk", mj.g, dual.gamma - cj0.gamma)
    sym = 0.5 * (n_low + np.swapaxes(n_low, 1, 2))  # N_i(jk)
    sym_s = 0.5 * (ns_low + np.swapaxes(ns_low, 1, 2))
    combined = sym + np.einsum("kij->ijk", 0.5 * (n_low + np.swapaxes(n_low, 1, 2)))
    return {
        "N_sym_last_pair": _max(sym),
        "N_dual_sym_last_pair": _max(sym_s),
        "combined": _max(combined),
    }
