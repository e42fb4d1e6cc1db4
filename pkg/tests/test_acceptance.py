"""Acceptance criteria 1-11, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline; they
are also repeated in the terminal summary of every pytest run.
"""
import numpy as np

from geoduel import duality as du
from geoduel import geometry as geo
from geoduel import infogeo as ig
from geoduel import mutual as mu
from geoduel import random_fields as rf
from geoduel.cli import dumps
from geoduel.expr import parse_expr
from geoduel.geometry import evaluate_field3
from geoduel.jet import VectorFieldSpec
from geoduel.sampling import sample_box
from geoduel.scenario import bundled_scenarios, load_scenario
from geoduel.suites import run_scenario
from geoduel.transport import TransportScenario, parallelogram_gap
from builders import symmetric_connection, three_form_connection
from conftest import ACCEPTANCE_LINES


def report(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _at(rng, metric, conn):
    x = rf.random_point(rng, metric.dim)
    mj = metric.jets(x)
    return x, mj, conn.jets(x, mj)


FISHER_POINTS = sample_box(10, 2024, [[-2, 2], [0.5, 3]])


def test_criterion_01_gaussian_fisher_metric():
    fam = ig.gaussian_family()
    worst = 0.0
    for mu_, sigma in FISHER_POINTS:
        g = ig.fisher_metric(fam, (mu_, sigma))
        worst = max(worst, float(np.max(np.abs(g - np.diag([1 / sigma**2, 2 / sigma**2])))))
    rep = run_scenario(load_scenario("gaussian"), threads=1)
    flags = [r["notes"].get("fisher_g22", {}).get("selected") for r in rep["suites"] if r["suite"] == "fisher_gaussian"]
    flagged = bool(flags) and all(f == "2/sigma^2" for f in flags)
    report(1, worst < 1e-8 and flagged, f"max |g - diag(1/s^2, 2/s^2)| = {worst:.2e} over 10 points; g22 adjudication flagged: {flagged}")


def test_criterion_02_gaussian_cubic_tensor():
    fam = ig.gaussian_family()
    worst = 0.0
    for mu_, sigma in FISHER_POINTS:
        C = ig.cubic_tensor_family(fam, (mu_, sigma))
        ref = np.zeros((2, 2, 2))
        ref[0, 0, 1] = ref[0, 1, 0] = ref[1, 0, 0] = 2 / sigma**3
        ref[1, 1, 1] = 8 / sigma**3
        worst = max(worst, float(np.max(np.abs(C - ref))))
    report(2, worst < 1e-8, f"max |C - closed form| = {worst:.2e} over 10 points")


def test_criterion_03_post_riemannian():
    rng = np.random.default_rng(3)
    worst = 0.0
    for k in range(100):
        n = (2, 3, 4)[k % 3]
        metric = rf.random_metric(rng, n)
        conn = rf.random_distorted(rng, n, metric, lowered=bool(k % 2))
        x, mj, cj = _at(rng, metric, conn)
        N, dN = conn.distortion_jets(x, mj)
        diff = geo.curvature(cj).data - geo.post_riemannian_curvature(geo.christoffel_lc(mj), N, dN).data
        worst = max(worst, float(np.max(np.abs(diff))))
    report(3, worst < 1e-9, f"max |R - R(post-Riemannian)| = {worst:.2e} over 100 scenarios, n in {{2,3,4}}")


def test_criterion_04_torsion_dual_suite():
    rng = np.random.default_rng(4)
    exact_ok, mean_worst, gap_zero = True, 0.0, True
    for k in range(30):
        n = (3, 4)[k % 2]
        metric, conn, _ = three_form_connection(rng, n)
        x, mj, cj = _at(rng, metric, conn)
        pair = du.torsion_dual(cj)
        back = du.torsion_dual(pair.dual).dual
        exact_ok &= not mu.mutual_torsion(cj, pair.dual).data.any()
        exact_ok &= not (geo.torsion(cj)[0].data + geo.torsion(pair.dual)[0].data).any()
        exact_ok &= np.array_equal(back.gamma, cj.gamma) and np.array_equal(back.dgamma, cj.dgamma)
        mean_worst = max(mean_worst, du.torsion_dual_properties(mj, pair)["mean_minus_lc"])
        u, ut = rng.normal(size=n), rng.normal(size=n)
        gap_zero &= not parallelogram_gap(TransportScenario(x, u, ut, 0.01, cj, pair.dual)).any()
    sc = load_scenario("mutual")
    x = sc.points[1]
    a, b = sc.connection("flat0").jets(x), sc.connection("flat1").jets(x)
    witness = float(np.max(np.abs(parallelogram_gap(TransportScenario(x, [1.0, 0.0], [0.0, 1.0], 1.0, a, b)))))
    torsion_free = geo.torsion(a)[0].max_abs() == 0.0 and geo.torsion(b)[0].max_abs() == 0.0
    ok = exact_ok and mean_worst < 1e-11 and gap_zero and witness > 0 and torsion_free
    report(4, ok, f"exact identities: {exact_ok}; max |mean - LC| = {mean_worst:.2e}; dual-pair gaps zero: {gap_zero}; "
                  f"torsion-free witness |V| = {witness:.3g}")


def test_criterion_05_theorem1_round_trip():
    rng = np.random.default_rng(5)
    anti, dual, recover = 0.0, 0.0, 0.0
    for k in range(40):
        n = 3 if k < 20 else 4
        metric, conn, grid = three_form_connection(rng, n)
        x, mj, cj = _at(rng, metric, conn)
        form = du.theorem1_decompose(mj, cj)
        anti = max(anti, form.residuals["antisymmetry"])
        dual = max(dual, form.residuals["dual"])
        recover = max(recover, float(np.max(np.abs(form.A.data - evaluate_field3(grid, x)[0]))))
    ok = anti < 1e-11 and dual < 1e-11 and recover < 1e-11
    report(5, ok, f"antisymmetry {anti:.2e}, Gamma* - (Gamma0 - A) {dual:.2e}, |A - A_in| {recover:.2e} "
                  f"(20 n=3 f*eps, 20 n=4 generic)")


def test_criterion_06_lemma_sign_sweep():
    rng = np.random.default_rng(6)
    locked, worst = set(), 0.0
    for p in (0, 1):
        for k in range(50):
            n = (3, 4)[k % 2]
            build = symmetric_connection if p == 0 else three_form_connection
            metric, conn, _ = build(rng, n)
            x = rf.random_point(rng, n)
            mj = metric.jets(x)
            N, dN = conn.distortion_jets(x, mj)
            rel = du.lemma_curvature_relation(mj, geo.christoffel_lc(mj), N, dN, p)
            locked.add(rel["locked"])
            if rel["locked"] is not None:
                worst = max(worst, rel["residuals"][rel["locked"]])
    ok = len(locked) == 1 and None not in locked and worst < 1e-9
    label = du.lemma_variant_label(next(iter(locked))) if ok else sorted(map(str, locked))
    report(6, ok, f"locked variant {label}; max residual {worst:.2e} over 50 scenarios for each p")


def test_criterion_07_theorem3():
    rng = np.random.default_rng(7)
    worst = 0.0
    for k in range(50):
        metric, conn, _ = three_form_connection(rng, (3, 4)[k % 2])
        _, mj, cj = _at(rng, metric, conn)
        worst = max(worst, du.theorem3_ricci_equality(mj, du.torsion_dual(cj)))
    report(7, worst < 1e-9, f"max |Ric - Ric*| = {worst:.2e} over 50 scenarios")


def test_criterion_08_mutual_curvature():
    rng = np.random.default_rng(8)
    exact, regrouped = True, 0.0
    for k in range(30):
        n = (2, 3, 4)[k % 3]
        x = rf.random_point(rng, n)
        a, b = rf.random_explicit(rng, n).jets(x), rf.random_explicit(rng, n).jets(x)
        r = mu.mutual_curvature(a, b).data
        exact &= np.array_equal(r, mu.mutual_curvature(b, a).data)
        exact &= np.array_equal(r, -np.swapaxes(r, 2, 3))
        exact &= np.array_equal(mu.mutual_curvature(a, a).data, mu.single_curvature(a).data)
        regrouped = max(regrouped, float(np.max(np.abs(mu.mutual_curvature_regrouped(a, b).data - r))))
    sc = load_scenario("mutual")
    x = sc.points[0]
    witness = mu.mutual_curvature(sc.connection("flat0").jets(x), sc.connection("flat1").jets(x)).max_abs()
    ok = exact and regrouped < 1e-9 and witness > 1e-3
    report(8, ok, f"swap/antisymmetry/reduction exact: {exact}; regrouped {regrouped:.2e}; flat+flat witness max-abs {witness:.3g}")


def test_criterion_09_flinearity():
    rng = np.random.default_rng(9)
    worst = {"paper": 0.0, "puechmorel": 0.0, "calin": 0.0}
    smallest_defect = np.inf
    for k in range(30):
        n = (2, 3, 4)[k % 3]
        x = rf.random_point(rng, n)
        a, b = rf.random_explicit(rng, n).jets(x), rf.random_explicit(rng, n).jets(x)
        field = lambda: VectorFieldSpec([parse_expr(rf.random_polynomial(rng, n, 2), rf.coords(n)) for _ in range(n)])
        X, Y, Z = field(), field(), field()
        f = parse_expr(rf.random_polynomial(rng, n, 2), rf.coords(n))
        for slot in ("X", "Y", "Z"):
            worst["paper"] = max(worst["paper"], mu.flinearity_defect("paper", X, Y, Z, f, a, b, x, slot=slot)["residual"])
        for def_id in ("puechmorel", "calin"):
            out = mu.flinearity_defect(def_id, X, Y, Z, f, a, b, x)
            worst[def_id] = max(worst[def_id], out["residual"])
            smallest_defect = min(smallest_defect, out["remainder_max"])
    ok = max(worst.values()) < 1e-9 and smallest_defect > 0
    report(9, ok, f"paper defect {worst['paper']:.2e}; puechmorel residual {worst['puechmorel']:.2e}; "
                  f"calin residual {worst['calin']:.2e}; smallest variant defect {smallest_defect:.2e}")


def test_criterion_10_classical_dual():
    rng = np.random.default_rng(10)
    W, sym, mix, mean = 0.0, 0.0, 0.0, 0.0
    for k in range(30):
        n = (2, 3, 4)[k % 3]
        metric, conn, _ = symmetric_connection(rng, n, factor=-0.5)
        x, mj, cj = _at(rng, metric, conn)
        pair = du.nonmetric_dual(mj, cj)
        W = max(W, mu.mutual_nonmetricity(mj, cj, pair.dual).max_abs())
        ct = du.cubic_tensor(mj, pair)
        sym = max(sym, ct.symmetry_residual)
        C = ct.C.data
        _, dC = geo.nonmetricity_jets(mj, cj)
        cj0 = geo.christoffel_lc(mj)
        alpha = rng.uniform(-3, 3)
        a = lambda s: du.alpha_connection(mj, cj0, C, dC, s)
        mixed = geo.convex_combination(a(1.0), a(-1.0), (1 + alpha) / 2)
        mix = max(mix, float(np.max(np.abs(a(alpha).gamma - mixed.gamma))))
        mean = max(mean, float(np.max(np.abs(0.5 * (a(alpha).gamma + a(-alpha).gamma) - cj0.gamma))))
    metric = rf.random_metric(rng, 3)
    _, mj, cj = _at(rng, metric, rf.random_symmetric_explicit(rng, 3))
    twice = du.generalized_dual(mj, du.generalized_dual(mj, cj, 0.25).dual, 0.25).dual
    gap = float(np.max(np.abs(twice.gamma - cj.gamma)))
    ok = W < 1e-12 and sym < 1e-12 and mix < 1e-12 and mean < 1e-12 and gap > 1e-3
    report(10, ok, f"mutual non-metricity {W:.2e}; C symmetry {sym:.2e}; alpha mixture {mix:.2e}; alpha mean {mean:.2e}; "
                   f"t=1/4 involution gap {gap:.3g}")


def test_criterion_11_report_determinism():
    identical = True
    for name in bundled_scenarios():
        first = dumps(run_scenario(load_scenario(name), threads=1))
        second = dumps(run_scenario(load_scenario(name), threads=1))
        threaded = dumps(run_scenario(load_scenario(name), threads=4))
        identical &= first == second == threaded
    report(11, identical, f"byte-identical reports for {len(bundled_scenarios())} bundled scenarios (two runs plus a 4-thread run)")
