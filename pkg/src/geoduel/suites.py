"""Verification suites run by the scenario runner.

Each suite evaluates a set of named checks over the scenario points and folds
them into a record.  A check is either an upper bound on a max-abs residual
("at_most"), a lower bound that certifies a witness is really nonzero
("at_least"), or informational.  Every record keeps the worst point and the
component index where it occurred.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import duality as du
from . import geometry as geo
from . import infogeo as ig
from . import mutual as mu
from . import transport as tr
from .errors import GeoDuelError
from .expr import parse_expr
from .jet import VectorFieldSpec, eval_jet2
from .sampling import sample_box
from .scenario import Scenario, SuiteSpec
from .tensor import DenseTensor, levi_civita_symbol, symmetrize

INFO = "info"
AT_MOST = "at_most"
AT_LEAST = "at_least"
NONZERO_FLOOR = 1e-6
WITNESS_FLOOR = 1e-3


def _num(x):
    """JSON-safe float."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _bits_equal(a, b):
    """0.0 when the arrays agree bit for bit, else their max-abs difference (at least tiny)."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape == b.shape and np.array_equal(a, b):
        return np.zeros_like(a, dtype=float)
    d = np.abs(a - b)
    return np.where(d == 0, 0.0, np.maximum(d, np.finfo(float).tiny))


class Check:
    def __init__(self, name, tolerance=None, tol_class=None, mode=AT_MOST):
        self.name = name
        self.tolerance = tolerance
        self.tol_class = tol_class
        self.mode = mode
        self.value = None
        self.worst = None
        self.count = 0

    def update(self, value, point_index, point, label=None):
        arr = np.abs(np.asarray(value, dtype=float))
        if arr.size == 0:
            return
        arr = np.where(np.isfinite(arr), arr, np.inf)
        idx = np.unravel_index(int(np.argmax(arr)), arr.shape)
        v = float(arr[idx])
        self.count += 1
        better = (
            self.value is None
            or (self.mode == AT_LEAST and v < self.value)
            or (self.mode != AT_LEAST and v > self.value)
        )
        if better:
            self.value = v
            self.worst = {
                "point_index": int(point_index),
                "point": [_num(x) for x in np.atleast_1d(point)],
                "component": [int(i) for i in idx],
            }
            if label is not None:
                self.worst["label"] = label

    @property
    def passed(self):
        if self.mode == INFO or self.value is None:
            return True
        if self.mode == AT_LEAST:
            return self.value >= self.tolerance
        return self.value <= self.tolerance

    def ratio(self):
        if self.mode != AT_MOST or self.value is None:
            return 0.0
        if self.tolerance == 0:
            return math.inf if self.value > 0 else 0.0
        return self.value / self.tolerance

    def to_dict(self):
        out = {"name": self.name, "mode": self.mode, "value": None if self.value is None else _num(self.value)}
        if self.mode != INFO:
            out["tolerance"] = _num(self.tolerance)
            out["tolerance_class"] = self.tol_class
            out["pass"] = self.passed
        out["evaluations"] = self.count
        if self.worst is not None:
            out["worst"] = self.worst
        return out


class SuiteContext:
    def __init__(self, scenario: Scenario, spec: SuiteSpec, mapper):
        self.scenario = scenario
        self.spec = spec
        self.options = spec.options
        self.map = mapper
        self.checks = {}
        self.errors = []
        self.notes = {}
        self.points_evaluated = 0
        self.expect_error = self.options.get("expect_error")
        self.expected_errors_seen = 0

    # tolerances ---------------------------------------------------------
    def tol(self, cls):
        if isinstance(cls, (int, float)):
            return float(cls), "fixed"
        return float(self.scenario.tolerances[cls]), cls

    def check(self, name, cls="exact", mode=AT_MOST):
        if name not in self.checks:
            if mode == INFO:
                self.checks[name] = Check(name, mode=INFO)
            else:
                tol, label = self.tol(cls)
                self.checks[name] = Check(name, tol, label, mode)
        return self.checks[name]

    # fields -------------------------------------------------------------
    def connection_names(self, pair=False):
        names = list(self.spec.connections) if self.spec.connections is not None else list(self.scenario.connections)
        if pair:
            if len(names) < 2:
                raise GeoDuelError(f"suite {self.spec.name} needs two connections (got {names})")
            return names[:2]
        return names

    def metric_jets(self, x):
        if self.scenario.metric is None:
            raise GeoDuelError(f"suite {self.spec.name} needs a metric")
        return self.scenario.metric.jets(x)

    def jets(self, name, x, mj=None):
        return self.scenario.connection(name).jets(x, mj)

    def scalar(self, key, default_builder):
        text = self.options.get(key)
        coords = self.scenario.coordinates
        if text is None:
            text = default_builder(coords)
        return parse_expr(text, coords, list(self.scenario.params))

    # driving ------------------------------------------------------------
    def over_points(self, fn, points=None, label=None):
        """Run ``fn(k, x) -> {check: (value[, label])}`` at each point and fold the results."""
        pts = self.scenario.points if points is None else points

        def safe(k):
            try:
                return fn(k, pts[k])
            except GeoDuelError as exc:
                return exc
            except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
                return exc

        results = self.map(safe, range(len(pts)))
        for k, res in enumerate(results):
            self.points_evaluated = max(self.points_evaluated, k + 1)
            if isinstance(res, Exception):
                self.error(res, k, pts[k], label)
                continue
            for name, val in res.items():
                self.checks[name].update(val, k, pts[k], label)

    def error(self, exc, k=None, x=None, label=None):
        if self.expect_error and type(exc).__name__ == self.expect_error:
            self.expected_errors_seen += 1
            return
        entry = {"type": type(exc).__name__, "message": str(exc)}
        if k is not None:
            entry["point_index"] = int(k)
            entry["point"] = [_num(v) for v in np.atleast_1d(x)]
        if label is not None:
            entry["label"] = label
        if len(self.errors) < 20:
            self.errors.append(entry)
        else:
            self.notes["errors_truncated"] = True

    def record(self, connections=None):
        checks = list(self.checks.values())
        passed = all(c.passed for c in checks) and not self.errors
        if self.expect_error:
            passed = passed and self.expected_errors_seen > 0
            self.notes["expected_error"] = self.expect_error
            self.notes["expected_errors_seen"] = self.expected_errors_seen
        failing = [c for c in checks if not c.passed]
        pool = failing or [c for c in checks if c.mode == AT_MOST and c.value is not None]
        governing = max(pool, key=lambda c: (c.ratio(), c.mode == AT_LEAST), default=None)
        rec = {
            "suite": self.spec.name,
            "connections": list(connections) if connections is not None else [],
            "points_evaluated": self.points_evaluated,
            "max_abs_residual": None if governing is None or governing.value is None else _num(governing.value),
            "tolerance": None if governing is None else _num(governing.tolerance),
            "governing_check": None if governing is None else governing.name,
            "pass": bool(passed),
            "worst": None if governing is None else governing.worst,
            "checks": [c.to_dict() for c in checks],
            "notes": self.notes,
        }
        if self.errors:
            rec["errors"] = self.errors
        return rec


# -- default smooth test fields written in the scenario's coordinates -----------


def _default_scalar(c):
    n = len(c)
    terms = [f"sin({c[0]})"] + [f"{0.3 * (i + 1)!r}*{c[i]}*{c[(i + 1) % n]}" for i in range(n)]
    return " + ".join(terms) + f" + 0.2*{c[-1]}^3"


def _default_vector(which, c):
    n = len(c)
    if which == "X":
        return [f"1 + {c[i]}*{c[(i + 1) % n]}" for i in range(n)]
    if which == "Y":
        return [f"0.5 + sin({c[i]}) - 0.25*{c[(i + 2) % n]}^2" for i in range(n)]
    return [f"{c[i]}^2 - {0.7 * (i + 1)!r}*{c[(i + 1) % n]} + 0.3" for i in range(n)]


def _vector_field(ctx, which):
    comps = ctx.options.get(which) or _default_vector(which, ctx.scenario.coordinates)
    if len(comps) != ctx.scenario.dimension:
        raise GeoDuelError(f"vector field {which} needs {ctx.scenario.dimension} components")
    return VectorFieldSpec([parse_expr(s, ctx.scenario.coordinates, list(ctx.scenario.params)) for s in comps])


def _sym_last_pair(n_low):
    return 0.5 * (n_low + np.swapaxes(n_low, 1, 2))


# -- single-connection suites ---------------------------------------------------------


def suite_metricity(ctx: SuiteContext):
    names = ctx.connection_names()
    expect = ctx.options.get("expect", "metric")
    ctx.check("levi_civita:Q", "exact")
    for name in names:
        mode = expect.get(name, "metric") if isinstance(expect, dict) else expect
        if mode == "metric":
            ctx.check(f"{name}:Q", "exact")
        else:
            ctx.check(f"{name}:Q", NONZERO_FLOOR, AT_LEAST)

    def fn(k, x):
        mj = ctx.metric_jets(x)
        out = {"levi_civita:Q": geo.nonmetricity(mj, geo.christoffel_lc(mj)).data}
        for name in names:
            out[f"{name}:Q"] = geo.nonmetricity(mj, ctx.jets(name, x, mj)).data
        return out

    ctx.over_points(fn)
    return names


def suite_post_riemannian(ctx: SuiteContext):
    names = ctx.connection_names()
    f = ctx.scalar("f", _default_scalar)
    for name in names:
        ctx.check(f"{name}:distortion_round_trip", "exact")
        ctx.check(f"{name}:expansion_vs_direct", "differential")
        ctx.check(f"{name}:torsion_commutator", "differential")

    def fn(k, x):
        mj = ctx.metric_jets(x)
        cj0 = geo.christoffel_lc(mj)
        fj = eval_jet2(f, x, ctx.scenario.params)
        out = {}
        for name in names:
            conn = ctx.scenario.connection(name)
            cj = conn.jets(x, mj)
            T, S = geo.torsion(cj)
            N = geo.distortion(mj, geo.nonmetricity(mj, cj), S)
            out[f"{name}:distortion_round_trip"] = N.data - (cj.gamma - cj0.gamma)
            n_, dn = conn.distortion_jets(x, mj)
            out[f"{name}:expansion_vs_direct"] = (
                geo.post_riemannian_curvature(cj0, n_, dn).data - geo.curvature(cj).data
            )
            H = geo.covariant_hessian(cj, fj.grad, fj.hess)
            out[f"{name}:torsion_commutator"] = (H - H.T) + np.einsum("lij,l->ij", T.data, fj.grad)
        return out

    ctx.over_points(fn)
    return names


def _basis_pairs(n):
    vecs = [np.eye(n)[i] for i in range(n)]
    generic = np.array([(i + 1.0) / n for i in range(n)])
    alt = np.array([(-1.0) ** i * 0.5 + 0.25 * i for i in range(n)])
    pairs = [(vecs[i], vecs[j]) for i in range(n) for j in range(n) if i != j]
    return pairs + [(generic, alt), (alt, generic)]


def suite_torsion_dual(ctx: SuiteContext):
    names = ctx.connection_names()
    have_metric = ctx.scenario.metric is not None
    for name in names:
        for c in ("mutual_torsion", "torsion_sum", "s_sum", "involution", "transport_gap"):
            ctx.check(f"{name}:{c}", 0.0)
        if have_metric:
            ctx.check(f"{name}:distortion_swap", "exact")
    applicable = {name: True for name in names}

    def fn(k, x):
        mj = ctx.metric_jets(x) if have_metric else None
        out = {}
        for name in names:
            cj = ctx.jets(name, x, mj)
            pair = du.torsion_dual(cj)
            back = du.torsion_dual(pair.dual).dual
            out[f"{name}:mutual_torsion"] = mu.mutual_torsion(cj, pair.dual).data
            out[f"{name}:involution"] = np.maximum(_bits_equal(back.gamma, cj.gamma).max(),
                                                   _bits_equal(back.dgamma, cj.dgamma).max())
            T, S = geo.torsion(cj)
            Ts, Ss = geo.torsion(pair.dual)
            out[f"{name}:torsion_sum"] = T.data + Ts.data
            out[f"{name}:s_sum"] = S.data + Ss.data
            gaps = [tr.parallelogram_gap(tr.TransportScenario(x, u, ut, 1.0, cj, pair.dual))
                    for u, ut in _basis_pairs(len(x))]
            out[f"{name}:transport_gap"] = np.array(gaps)
            if have_metric:
                props = du.torsion_dual_properties(mj, pair)
                out[f"{name}:distortion_swap"] = props["arrays"]["distortion_swap"]
                if props["mean_minus_lc"] == "not-applicable":
                    applicable[name] = False
                else:
                    out[f"{name}:mean_minus_levi_civita"] = props["arrays"]["mean_minus_lc"]
        return out

    for name in names:
        if have_metric:
            ctx.check(f"{name}:mean_minus_levi_civita", "exact")
    ctx.over_points(fn)
    for name in names:
        key = f"{name}:mean_minus_levi_civita"
        if have_metric and not applicable[name]:
            ctx.checks.pop(key, None)
            ctx.notes[key] = "not-applicable (connection is not metric)"
    return names


def suite_nonmetric_dual(ctx: SuiteContext):
    names = ctx.connection_names()
    for name in names:
        ctx.check(f"{name}:dual_relation", "exact")
        ctx.check(f"{name}:mutual_nonmetricity", "exact")
        ctx.check(f"{name}:involution", "exact")
        ctx.check(f"{name}:first_pair_asymmetry", mode=INFO)
    torsion_free = {name: True for name in names}

    def fn(k, x):
        mj = ctx.metric_jets(x)
        out = {}
        for name in names:
            cj = ctx.jets(name, x, mj)
            pair = du.nonmetric_dual(mj, cj)
            back = du.nonmetric_dual_jets(mj, pair.dual)
            out[f"{name}:dual_relation"] = du.dual_relation_array(mj, cj, pair.dual)
            out[f"{name}:mutual_nonmetricity"] = mu.mutual_nonmetricity(mj, cj, pair.dual).data
            out[f"{name}:involution"] = back.gamma - cj.gamma
            out[f"{name}:first_pair_asymmetry"] = pair.notes["first_pair_asymmetry"]
            s = max(geo.torsion(cj)[1].max_abs(), geo.torsion(pair.dual)[1].max_abs())
            if s > du.SYMMETRY_TOL:
                torsion_free[name] = False
            else:
                C = geo.nonmetricity(mj, cj)
                Cs = geo.nonmetricity(mj, pair.dual)
                out[f"{name}:cubic_symmetry"] = C.data - symmetrize(C, (0, 1, 2)).data
                out[f"{name}:dual_cubic"] = Cs.data + C.data
        return out

    for name in names:
        ctx.check(f"{name}:cubic_symmetry", "exact")
        ctx.check(f"{name}:dual_cubic", "exact")
    ctx.over_points(fn)
    for name in names:
        asym = ctx.checks[f"{name}:first_pair_asymmetry"].value
        ctx.notes[f"{name}:first_pair_asymmetric"] = bool(asym is not None and asym > du.SYMMETRY_TOL)
        if not torsion_free[name]:
            for c in ("cubic_symmetry", "dual_cubic"):
                ctx.checks.pop(f"{name}:{c}", None)
            ctx.notes[f"{name}:cubic_tensor"] = "not-applicable (torsion present)"
    return names


def suite_alpha_family(ctx: SuiteContext):
    names = ctx.connection_names()
    alphas = [float(a) for a in ctx.options.get("alphas", [0.3, 1.0, 2.5])]
    for name in names:
        for c in ("mean_identity", "mixture_identity", "dual_coupling", "alpha_one_is_primal"):
            ctx.check(f"{name}:{c}", "exact")

    def fn(k, x):
        mj = ctx.metric_jets(x)
        cj0 = geo.christoffel_lc(mj)
        out = {}
        for name in names:
            cj = ctx.jets(name, x, mj)
            pair = du.nonmetric_dual(mj, cj)
            C = du.cubic_tensor(mj, pair)
            _, dC = geo.nonmetricity_jets(mj, cj)
            one = du.alpha_connection(mj, cj0, C, dC, 1.0)
            out[f"{name}:alpha_one_is_primal"] = one.gamma - cj.gamma
            mean, mix, coup = [], [], []
            for a in alphas:
                plus = du.alpha_connection(mj, cj0, C, dC, a)
                minus = du.alpha_connection(mj, cj0, C, dC, -a)
                mean.append(0.5 * (plus.gamma + minus.gamma) - cj0.gamma)
                mix.append(plus.gamma - (0.5 * (1 + a) * cj.gamma + 0.5 * (1 - a) * pair.dual.gamma))
                lp, _ = geo.lower_connection(mj, plus)
                lm, _ = geo.lower_connection(mj, minus)
                coup.append(mj.dg - np.einsum("kji->ijk", lp) - np.einsum("jki->ijk", lm))
            out[f"{name}:mean_identity"] = np.array(mean)
            out[f"{name}:mixture_identity"] = np.array(mix)
            out[f"{name}:dual_coupling"] = np.array(coup)
        return out

    ctx.over_points(fn)
    ctx.notes["alphas"] = alphas
    return names


def suite_generalized_dual(ctx: SuiteContext):
    names = ctx.connection_names()
    ts = [float(t) for t in ctx.options.get("ts", [0.25, 0.5, 0.75])]
    expect_failure = bool(ctx.options.get("expect_involution_failure", True))
    for name in names:
        ctx.check(f"{name}:combination_metricity", "exact")
        if 0.5 in ts:
            ctx.check(f"{name}:half_matches_nonmetric_dual", "exact")
        for t in ts:
            if t != 0.5:
                mode = AT_LEAST if expect_failure else INFO
                ctx.check(f"{name}:involution_gap(t={t!r})", WITNESS_FLOOR, mode)

    def fn(k, x):
        mj = ctx.metric_jets(x)
        out = {}
        for name in names:
            cj = ctx.jets(name, x, mj)
            res = []
            for t in ts:
                pair = du.generalized_dual(mj, cj, t)
                comb = geo.convex_combination(cj, pair.dual, t)
                res.append(geo.nonmetricity(mj, comb).data)
                if t == 0.5:
                    out[f"{name}:half_matches_nonmetric_dual"] = pair.dual.gamma - du.nonmetric_dual_jets(mj, cj).gamma
                else:
                    back = du.generalized_dual(mj, pair.dual, t).dual
                    out[f"{name}:involution_gap(t={t!r})"] = back.gamma - cj.gamma
            out[f"{name}:combination_metricity"] = np.array(res)
        return out

    ctx.over_points(fn)
    ctx.notes["ts"] = ts
    return names


def suite_theorem1(ctx: SuiteContext):
    names = ctx.connection_names()
    for name in names:
        for c in ("antisymmetry", "primal", "dual"):
            ctx.check(f"{name}:{c}", "exact")
        if name in ctx.scenario.generators:
            ctx.check(f"{name}:generator", "exact")

    def fn(k, x):
        mj = ctx.metric_jets(x)
        out = {}
        for name in names:
            cj = ctx.jets(name, x, mj)
            form = du.theorem1_decompose(mj, cj)
            for c in ("antisymmetry", "primal", "dual"):
                out[f"{name}:{c}"] = form.residuals[c]
            f = ctx.scenario.generators.get(name)
            if f is not None:
                fv = eval_jet2(f, x, ctx.scenario.params).value
                out[f"{name}:generator"] = form.A.data - fv * levi_civita_symbol(3).data
        return out

    # theorem1 errors are per connection, so run one connection at a time
    if ctx.expect_error:
        for name in names:
            def one(k, x, name=name):
                mj = ctx.metric_jets(x)
                du.theorem1_decompose(mj, ctx.jets(name, x, mj))
                return {}
            ctx.over_points(one, label=name)
        ctx.checks.clear()
    else:
        ctx.over_points(fn)
    return names


def _lemma(ctx: SuiteContext, forced_p=None):
    names = ctx.connection_names()
    p_opt = ctx.options.get("p", "auto") if forced_p is None else forced_p
    labels = {v: f"variant{v}" for v in du.LEMMA_VARIANTS}
    used_p = {}

    def classify(mj, n_):
        n_low = np.einsum("im,mjk->ijk", mj.g, n_)
        if np.max(np.abs(n_low - np.swapaxes(n_low, 0, 1))) <= du.SYMMETRY_TOL:
            return 0
        return 1

    for name in names:
        for v in du.LEMMA_VARIANTS:
            ctx.check(f"{name}:{labels[v]}", mode=INFO)
        ctx.check(f"{name}:derivative_term", mode=INFO)

    def fn(k, x):
        mj = ctx.metric_jets(x)
        cj0 = geo.christoffel_lc(mj)
        out = {}
        for name in names:
            n_, dn = ctx.scenario.connection(name).distortion_jets(x, mj)
            p = classify(mj, n_) if p_opt == "auto" else int(p_opt)
            used_p.setdefault(name, set()).add(p)
            rep = du.lemma_curvature_relation(mj, cj0, n_, dn, p)
            for v, r in rep["residual_arrays"].items():
                out[f"{name}:{labels[v]}"] = r
            out[f"{name}:derivative_term"] = rep["derivative_term_max"]
        return out

    ctx.over_points(fn)
    tol, cls = ctx.tol("differential")
    locked_all = []
    for name in names:
        maxima = {v: ctx.checks[f"{name}:{labels[v]}"].value for v in du.LEMMA_VARIANTS}
        passing = [v for v, r in maxima.items() if r is not None and r < tol]
        locked = passing[0] if len(passing) == 1 else None
        lock = Check(f"{name}:locked_variant", tol, cls, AT_MOST)
        if locked is not None:
            src = ctx.checks[f"{name}:{labels[locked]}"]
            lock.value, lock.worst, lock.count = src.value, src.worst, src.count
            locked_all.append(locked)
        else:
            lock.value = math.inf
        ctx.checks[lock.name] = lock
        ctx.notes[f"{name}:p"] = sorted(used_p.get(name, []))
        ctx.notes[f"{name}:passing_variants"] = [list(v) for v in passing]
        ctx.notes[f"{name}:locked_variant"] = list(locked) if locked else None
        ctx.notes[f"{name}:locked_label"] = du.lemma_variant_label(locked) if locked else None
    consistent = len(set(locked_all)) <= 1 and len(locked_all) == len(names)
    ctx.notes["locked_variant"] = list(locked_all[0]) if consistent and locked_all else None
    ctx.notes["locked_label"] = du.lemma_variant_label(locked_all[0]) if consistent and locked_all else None
    ctx.notes["variant_key"] = "(s_join, s_inner): R_ijkl + s_join R*_jikl - (1 + s_inner (-1)^p) 2 nabla0_[k N_|ij|l]"
    if not consistent:
        bad = Check("variant_consistency", 0.0, "fixed", AT_MOST)
        bad.value = 1.0
        ctx.checks[bad.name] = bad
    return names


def suite_lemma(ctx):
    return _lemma(ctx)


def suite_theorem2(ctx):
    names = _lemma(ctx, forced_p=1)
    for name in names:
        d = ctx.checks[f"{name}:derivative_term"].value
        ctx.notes[f"{name}:flatness_implied"] = bool(d is not None and d == 0.0)
    return names


def suite_theorem3(ctx: SuiteContext):
    names = ctx.connection_names()
    for name in names:
        ctx.check(f"{name}:ricci_difference", "differential")
        ctx.check(f"{name}:ricci", mode=INFO)

    def fn(k, x):
        mj = ctx.metric_jets(x)
        out = {}
        for name in names:
            cj = ctx.jets(name, x, mj)
            pair = du.torsion_dual(cj)
            out[f"{name}:ricci_difference"] = du.theorem3_ricci_equality(mj, pair)
            out[f"{name}:ricci"] = geo.ricci_scalar(geo.curvature(cj), mj)
        return out

    ctx.over_points(fn)
    return names


def suite_both_senses(ctx: SuiteContext):
    names = ctx.connection_names()
    expect = ctx.options.get("expect", "satisfied")
    for name in names:
        mode = expect.get(name, "satisfied") if isinstance(expect, dict) else expect
        if mode == "satisfied":
            for c in ("N_sym_last_pair", "N_dual_sym_last_pair", "combined"):
                ctx.check(f"{name}:{c}", "exact")
        else:
            ctx.check(f"{name}:N_sym_last_pair", mode=INFO)
            ctx.check(f"{name}:N_dual_sym_last_pair", mode=INFO)
            ctx.check(f"{name}:combined", NONZERO_FLOOR, AT_LEAST)

    def fn(k, x):
        mj = ctx.metric_jets(x)
        out = {}
        for name in names:
            rep = du.both_senses_constraint(mj, ctx.jets(name, x, mj))
            for c in ("N_sym_last_pair", "N_dual_sym_last_pair", "combined"):
                out[f"{name}:{c}"] = rep[c]
        return out

    ctx.over_points(fn)
    return names


# -- two-connection suites -----------------------------------------------------------


def suite_mutual_tensors(ctx: SuiteContext):
    a, b = ctx.connection_names(pair=True)
    have_metric = ctx.scenario.metric is not None
    f = ctx.scalar("f", _default_scalar)
    for c in ("footnote_K_T2", "footnote_T1_K"):
        ctx.check(c, "exact")
    ctx.check("mixed_commutator", "differential")
    ctx.check("difference_commutator", "differential")
    ctx.check("mutual_torsion", mode=INFO)
    if have_metric:
        ctx.check("W_is_mean_of_Q", "exact")
        ctx.check("mutual_nonmetricity", mode=INFO)

    def fn(k, x):
        mj = ctx.metric_jets(x) if have_metric else None
        c1, c2 = ctx.jets(a, x, mj), ctx.jets(b, x, mj)
        M = mu.mutual_torsion(c1, c2).data
        K = geo.difference_tensor(c1, c2).data
        T1, T2 = geo.torsion(c1)[0].data, geo.torsion(c2)[0].data
        fj = eval_jet2(f, x, ctx.scenario.params)
        H1 = geo.covariant_hessian(c1, fj.grad, fj.hess)
        H2 = geo.covariant_hessian(c2, fj.grad, fj.hess)
        out = {
            "footnote_K_T2": M - (K + np.swapaxes(T2, 1, 2)),
            "footnote_T1_K": M - (np.swapaxes(T1, 1, 2) + np.swapaxes(K, 1, 2)),
            # (nabla1_i nabla2_j - nabla2_j nabla1_i) f = -M^l_ji d_l f
            "mixed_commutator": (H1 - H2.T) + np.einsum("lji,l->ij", M, fj.grad),
            # (nabla1_i nabla2_j - nabla2_i nabla1_j) f = -K^l_ji d_l f
            "difference_commutator": (H1 - H2) + np.einsum("lji,l->ij", K, fj.grad),
            "mutual_torsion": M,
        }
        if have_metric:
            W = mu.mutual_nonmetricity(mj, c1, c2).data
            q1, q2 = geo.nonmetricity(mj, c1).data, geo.nonmetricity(mj, c2).data
            out["W_is_mean_of_Q"] = W - 0.5 * (q1 + q2)
            out["mutual_nonmetricity"] = W
        return out

    ctx.over_points(fn)
    return [a, b]


def suite_mutual_curvature(ctx: SuiteContext):
    a, b = ctx.connection_names(pair=True)
    ctx.check("swap_symmetry", 0.0)
    ctx.check("antisymmetry_ij", 0.0)
    ctx.check("reduction_first", 0.0)
    ctx.check("reduction_second", 0.0)
    ctx.check("regrouped_form", "differential")
    if ctx.options.get("expect_nonzero"):
        ctx.check("mutual_curvature", float(ctx.options.get("nonzero_floor", WITNESS_FLOOR)), AT_LEAST)
    else:
        ctx.check("mutual_curvature", mode=INFO)

    def fn(k, x):
        mj = ctx.metric_jets(x) if ctx.scenario.metric is not None else None
        c1, c2 = ctx.jets(a, x, mj), ctx.jets(b, x, mj)
        R12 = mu.mutual_curvature(c1, c2).data
        return {
            "swap_symmetry": _bits_equal(R12, mu.mutual_curvature(c2, c1).data),
            "antisymmetry_ij": _bits_equal(R12, -np.swapaxes(R12, 2, 3)),
            "reduction_first": _bits_equal(mu.mutual_curvature(c1, c1).data, geo.curvature(c1).data),
            "reduction_second": _bits_equal(mu.mutual_curvature(c2, c2).data, geo.curvature(c2).data),
            "regrouped_form": R12 - mu.mutual_curvature_regrouped(c1, c2).data,
            "mutual_curvature": R12,
        }

    ctx.over_points(fn)
    return [a, b]


def suite_flinearity(ctx: SuiteContext):
    a, b = ctx.connection_names(pair=True)
    X, Y, Z = (_vector_field(ctx, w) for w in ("X", "Y", "Z"))
    f = ctx.scalar("f", lambda c: f"{c[0]} + 0.5*{c[0]}*{c[-1]}")
    defs = ctx.options.get("definitions", ["paper", "puechmorel", "calin"])
    expect_nonzero = bool(ctx.options.get("expect_nonzero", True))
    plan = []
    for d in defs:
        if d not in mu.DEFINITIONS:
            raise GeoDuelError(f"unknown definition {d!r}; expected one of {sorted(mu.DEFINITIONS)}")
        slots = ("X", "Y", "Z") if d == "paper" else (mu.DEFAULT_SCALED_SLOT[d],)
        for s in slots:
            plan.append((d, s))
            ctx.check(f"{d}:{s}:residual", "differential")
            if d != "paper":
                mode = AT_LEAST if expect_nonzero else INFO
                ctx.check(f"{d}:{s}:defect", NONZERO_FLOOR, mode)

    def fn(k, x):
        mj = ctx.metric_jets(x) if ctx.scenario.metric is not None else None
        c1, c2 = ctx.jets(a, x, mj), ctx.jets(b, x, mj)
        out = {}
        for d, s in plan:
            rep = mu.flinearity_defect(d, X, Y, Z, f, c1, c2, x, ctx.scenario.params, slot=s)
            out[f"{d}:{s}:residual"] = rep["remainder"] - rep["predicted"]
            if d != "paper":
                out[f"{d}:{s}:defect"] = rep["remainder"]
        return out

    ctx.over_points(fn)
    return [a, b]


def suite_curvature_dual(ctx: SuiteContext):
    a, b = ctx.connection_names(pair=True)
    expect = ctx.options.get("expect", "dual")
    if expect == "dual":
        ctx.check("residual", "differential")
    else:
        ctx.check("residual", NONZERO_FLOOR, AT_LEAST)
    ctx.check("equals_mutual_curvature", 0.0)

    def fn(k, x):
        mj = ctx.metric_jets(x) if ctx.scenario.metric is not None else None
        c1, c2 = ctx.jets(a, x, mj), ctx.jets(b, x, mj)
        res = mu.curvature_dual_residual(c1, c2).data
        return {"residual": res, "equals_mutual_curvature": _bits_equal(res, mu.mutual_curvature(c1, c2).data)}

    ctx.over_points(fn)
    ctx.notes["expect"] = expect
    return [a, b]


def transport_entries(scenario: Scenario, options=None):
    """Resolve transport entries to (label, point, u, u~, delta_lambda, conn_a, conn_b, expect)."""
    options = options or {}
    entries = list(scenario.transport) + list(options.get("entries", []))
    out = []
    for k, e in enumerate(entries):
        p = e.get("point", 0)
        if isinstance(p, int):
            if not 0 <= p < len(scenario.points):
                raise GeoDuelError(f"transport entry {k}: point index {p} out of range")
            x = scenario.points[p]
        else:
            x = np.asarray(p, dtype=float)
        out.append((
            e.get("label", f"entry{k}"), x,
            np.asarray(e["u"], dtype=float), np.asarray(e["u_tilde"], dtype=float),
            float(e.get("delta_lambda", 1e-3)), e["conn_a"], e["conn_b"], e.get("expect"),
        ))
    return out


def run_transport(scenario: Scenario, entry):
    label, x, u, ut, dl, a, b, _ = entry
    mj = scenario.metric.jets(x) if scenario.metric is not None else None
    ca, cb = scenario.connection(a).jets(x, mj), scenario.connection(b).jets(x, mj)
    sc = tr.TransportScenario(x, u, ut, dl, ca, cb)
    gap = tr.parallelogram_gap(sc)
    return sc, gap


def suite_transport(ctx: SuiteContext):
    entries = transport_entries(ctx.scenario, ctx.options)
    names = sorted({e[5] for e in entries} | {e[6] for e in entries})
    gaps = {}
    for idx, entry in enumerate(entries):
        label, x = entry[0], entry[1]
        expect = entry[7]
        ctx.check(f"{label}:closed_form", "exact")
        ctx.check(f"{label}:bilinearity", 0.0)
        if expect == "zero":
            ctx.check(f"{label}:V", 0.0)
        elif expect == "nonzero":
            ctx.check(f"{label}:V", NONZERO_FLOOR, AT_LEAST)
        else:
            ctx.check(f"{label}:V", mode=INFO)
        try:
            sc, gap = run_transport(ctx.scenario, entry)
            V = gap / sc.delta_lambda
            closed = tr.gap_vector(sc.conn_a, sc.conn_b, sc.u, sc.u_tilde)
            doubled = tr.parallelogram_gap(tr.TransportScenario(x, 2.0 * sc.u, sc.u_tilde, sc.delta_lambda,
                                                                sc.conn_a, sc.conn_b))
            ctx.checks[f"{label}:closed_form"].update(V - closed, idx, x)
            ctx.checks[f"{label}:bilinearity"].update(_bits_equal(doubled, 2.0 * gap), idx, x)
            ctx.checks[f"{label}:V"].update(V, idx, x)
            gaps[label] = [_num(v) for v in V]
        except (GeoDuelError, ValueError, ArithmeticError) as exc:
            ctx.error(exc, idx, x, label)
        ctx.points_evaluated = idx + 1
    ctx.notes["V"] = gaps
    return names


def suite_combination_curvature(ctx: SuiteContext):
    a, b = ctx.connection_names(pair=True)
    ts = [float(t) for t in ctx.options.get("ts", [0.0, 0.3, 0.5, 1.0])]
    have_metric = ctx.scenario.metric is not None
    ctx.check("riemann_identity", "differential")
    if have_metric:
        ctx.check("ricci_identity", "differential")

    def fn(k, x):
        mj = ctx.metric_jets(x) if have_metric else None
        c1, c2 = ctx.jets(a, x, mj), ctx.jets(b, x, mj)
        rie, ric = [], []
        for t in ts:
            r, s = geo.combination_curvature_residual(c1, c2, t, mj)
            rie.append(r)
            ric.append(0.0 if s is None else s)
        out = {"riemann_identity": np.array(rie)}
        if have_metric:
            out["ricci_identity"] = np.array(ric)
        return out

    ctx.over_points(fn)
    ctx.notes["ts"] = ts
    return [a, b]


# -- statistical families ---------------------------------------------------------------


def _gaussian_points(ctx):
    for spec in ctx.scenario.families.values():
        if spec.builtin and spec.family.name == "gaussian":
            return spec.points, spec.family
    count = int(ctx.options.get("count", 10))
    seed = int(ctx.options.get("seed", 20240601))
    box = ctx.options.get("box", [[-2.0, 2.0], [0.5, 3.0]])
    return sample_box(count, seed, box), ig.gaussian_family()


def _family_checks(ctx, prefix, fam, pts, flat_tol=None, closed=None):
    ctx.check(f"{prefix}:normalization", "quadrature")
    ctx.check(f"{prefix}:score_mean", "differential")
    ctx.check(f"{prefix}:positive_definite", 1e-12, AT_LEAST)
    ctx.check(f"{prefix}:cubic_symmetry", "exact")
    ctx.check(f"{prefix}:convergence", "differential")
    ctx.check(f"{prefix}:alpha_coupling", "quadrature")
    if closed is not None:
        ctx.check(f"{prefix}:g_vs_closed_form", "quadrature")
        ctx.check(f"{prefix}:g12", "differential")
        ctx.check(f"{prefix}:C_vs_closed_form", "quadrature")
    if flat_tol is not None:
        ctx.check(f"{prefix}:alpha1_flatness", flat_tol)
    finer = _refined(fam)

    def fn(k, x):
        fd = ig.fisher_jets(fam, x, check=False)
        fine = ig.fisher_jets(finer, x, check=False)
        st = ig.family_alpha_structure(fam, x, 1.0)
        out = {
            f"{prefix}:normalization": fd.normalization - 1.0,
            f"{prefix}:score_mean": fd.score_mean,
            f"{prefix}:positive_definite": np.linalg.eigvalsh(0.5 * (fd.g + fd.g.T)).min(),
            f"{prefix}:cubic_symmetry": fd.C - symmetrize(DenseTensor(fd.C, "lll"), (0, 1, 2)).data,
            f"{prefix}:convergence": np.concatenate([(fine.g - fd.g).ravel(), (fine.C - fd.C).ravel()]),
            f"{prefix}:alpha_coupling": st.coupling_residual,
        }
        if closed is not None:
            cf = closed(*x)
            out[f"{prefix}:g_vs_closed_form"] = fd.g - cf.g
            out[f"{prefix}:g12"] = np.array([fd.g[0, 1], fd.g[1, 0]])
            out[f"{prefix}:C_vs_closed_form"] = fd.C - cf.C
        if flat_tol is not None:
            out[f"{prefix}:alpha1_flatness"] = st.curvature_plus
        return out

    ctx.over_points(fn, points=pts)


def _refined(fam: ig.ParametricFamily) -> ig.ParametricFamily:
    q = fam.quadrature
    finer = ig.Quadrature(q.kind, 2 * q.nodes, 2 * q.panels, q.panel_order)
    return ig.ParametricFamily(fam.name, fam.log_density, fam.params, fam.sample_var, fam.domain,
                               fam.center, fam.scale, finer)


def suite_fisher_gaussian(ctx: SuiteContext):
    pts, fam = _gaussian_points(ctx)
    flat_tol = float(ctx.options.get("flatness_tol", 1e-7))
    _family_checks(ctx, "gaussian", fam, pts, flat_tol=flat_tol, closed=ig.gaussian_closed_forms)
    adj = ig.adjudicate_g22(fam, (0.0, 1.0))
    g = ig.fisher_metric(fam, (0.0, 1.0))
    ctx.notes["fisher_g22"] = {
        "note": adj["note"],
        "g22_at_sigma_1": _num(adj["g22"]),
        "selected": adj["selected"],
        "rejected": [k for k in adj["candidates"] if k != adj["selected"]],
    }
    ctx.notes["g_at_mu0_sigma1"] = [[_num(v) for v in row] for row in g]
    return ["gaussian"]


def suite_fisher_custom(ctx: SuiteContext):
    fams = ctx.options.get("families") or list(ctx.scenario.families)
    for name in fams:
        if name not in ctx.scenario.families:
            raise GeoDuelError(f"unknown family {name!r}; available: {sorted(ctx.scenario.families)}")
        spec = ctx.scenario.families[name]
        _family_checks(ctx, name, spec.family, spec.points)
    return list(fams)


SUITE_FUNCTIONS = {
    "metricity": suite_metricity,
    "post_riemannian": suite_post_riemannian,
    "torsion_dual": suite_torsion_dual,
    "nonmetric_dual": suite_nonmetric_dual,
    "alpha_family": suite_alpha_family,
    "generalized_dual": suite_generalized_dual,
    "theorem1": suite_theorem1,
    "lemma": suite_lemma,
    "theorem2": suite_theorem2,
    "theorem3": suite_theorem3,
    "both_senses": suite_both_senses,
    "mutual_tensors": suite_mutual_tensors,
    "mutual_curvature": suite_mutual_curvature,
    "flinearity": suite_flinearity,
    "curvature_dual": suite_curvature_dual,
    "transport": suite_transport,
    "fisher_gaussian": suite_fisher_gaussian,
    "fisher_custom": suite_fisher_custom,
    "combination_curvature": suite_combination_curvature,
}


def thread_count() -> int:
    raw = os.environ.get("GEODUEL_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return max(1, min(4, os.cpu_count() or 1))


def run_suite(scenario: Scenario, spec: SuiteSpec, mapper=map) -> dict:
    ctx = SuiteContext(scenario, spec, lambda fn, it: list(mapper(fn, it)))
    try:
        names = SUITE_FUNCTIONS[spec.name](ctx)
    except (GeoDuelError, ValueError, KeyError, ArithmeticError) as exc:
        names = list(spec.connections or [])
        ctx.error(exc)
    return ctx.record(names)


def run_scenario(scenario: Scenario, threads: int = None) -> dict:
    """Run every suite and assemble the (deterministic) report."""
    threads = thread_count() if threads is None else max(1, int(threads))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = [run_suite(scenario, s, pool.map) for s in scenario.suites]
    else:
        records = [run_suite(scenario, s) for s in scenario.suites]
    passed = sum(r["pass"] for r in records)
    return {
        "schema": 1,
        "scenario": scenario.name,
        "dimension": scenario.dimension,
        "coordinates": scenario.coordinates,
        "points": [[_num(v) for v in p] for p in scenario.points],
        "tolerances": {k: _num(v) for k, v in scenario.tolerances.items()},
        "suites": records,
        "summary": {
            "suites": len(records),
            "passed": passed,
            "failed": len(records) - passed,
            "all_pass": passed == len(records),
        },
    }
