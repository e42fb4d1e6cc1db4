"""Command-line entry point: ``geoduel check|tensors|fisher|transport|list``."""
from __future__ import annotations

import argparse
import itertools
import json
import sys

import numpy as np

from . import geometry as geo
from . import infogeo as ig
from .connections import LeviCivitaConnection
from .errors import GeoDuelError, IndexOutOfRange
from .scenario import bundled_scenarios, load_scenario
from .suites import run_scenario, run_transport, transport_entries

LEVI_CIVITA = "levi_civita"


def dumps(report) -> str:
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


def _summary_line(rec):
    status = "PASS" if rec["pass"] else "FAIL"
    line = f"{status}  {rec['suite']:<22}"
    if rec["connections"]:
        line += f" [{', '.join(rec['connections'])}]"
    if rec["max_abs_residual"] is not None:
        line += f"  max={rec['max_abs_residual']:.3e} tol={rec['tolerance']:.1e} ({rec['governing_check']})"
    notes = rec["notes"]
    if notes.get("locked_label"):
        line += f"  locked: {notes['locked_label']}"
    if "fisher_g22" in notes:
        line += f"  {notes['fisher_g22']['note']}"
    if not rec["pass"]:
        w = rec.get("worst")
        if w:
            line += f"  worst point #{w['point_index']} component {tuple(w['component'])}"
        for err in rec.get("errors", [])[:3]:
            line += f"  error {err['type']}: {err['message']}"
    return line


def cmd_check(args) -> int:
    scenario = load_scenario(args.scenario)
    report = run_scenario(scenario, threads=args.threads)
    text = dumps(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    if args.json:
        sys.stdout.write(text)
    else:
        for rec in report["suites"]:
            print(_summary_line(rec))
        s = report["summary"]
        print(f"{s['passed']}/{s['suites']} suites passed")
    return 0 if report["summary"]["all_pass"] else 1


def _dump(name, array, out):
    array = np.asarray(array)
    if array.ndim == 0:
        out.append(f"{name} = {float(array):.17g}")
        return
    for idx in itertools.product(*(range(s) for s in array.shape)):
        out.append(f"{name}[{','.join(map(str, idx))}] = {float(array[idx]):.17g}")


def tensor_dump(scenario, point: int, connection: str = None) -> list:
    """Lines ``NAME[i,j,...] = value`` in lexicographic index order, 17 significant digits."""
    if not 0 <= point < len(scenario.points):
        raise IndexOutOfRange(f"point {point} out of range; the scenario has {len(scenario.points)} points")
    if scenario.metric is None:
        raise GeoDuelError("tensor dumps need a metric")
    available = list(scenario.connections) + ([LEVI_CIVITA] if LEVI_CIVITA not in scenario.connections else [])
    if connection is None:
        connection = next(iter(scenario.connections), LEVI_CIVITA)
    if connection not in available:
        raise GeoDuelError(f"unknown connection {connection!r}; available: {', '.join(available)}")
    conn = scenario.connections.get(connection) or LeviCivitaConnection(scenario.metric)
    x = scenario.points[point]
    mj = scenario.metric.jets(x)
    cj = conn.jets(x, mj)
    T, S = geo.torsion(cj)
    Q = geo.nonmetricity(mj, cj)
    N = cj.gamma - geo.christoffel_lc(mj).gamma
    R = geo.curvature(cj)
    out = [f"# connection {connection} at point {point} = ({', '.join(f'{v:.17g}' for v in x)})"]
    for name, arr in (
        ("g", mj.g),
        ("Gamma", cj.gamma),
        ("T", T.data),
        ("S", S.data),
        ("Q", Q.data),
        ("N", N),
        ("R", R.data),
        ("R_lower", geo.lower_curvature(mj, R).data),
        ("Ric", geo.ricci_scalar(R, mj)),
    ):
        _dump(name, arr, out)
    return out


def cmd_tensors(args) -> int:
    scenario = load_scenario(args.scenario)
    print("\n".join(tensor_dump(scenario, args.point, args.connection)))
    return 0


def cmd_fisher(args) -> int:
    fam = ig.get_family(args.family, quadrature=ig.Quadrature(nodes=args.nodes))
    xi = (args.mu, args.sigma)
    closed = ig.gaussian_closed_forms(*xi)
    fd = ig.fisher_jets(fam, xi)
    result = {
        "family": args.family,
        "xi": {"mu": args.mu, "sigma": args.sigma},
        "nodes": args.nodes,
        "g": fd.g.tolist(),
        "C": fd.C.tolist(),
        "g_closed_form": closed.g.tolist(),
        "C_closed_form": closed.C.tolist(),
        "max_gap_g": float(np.max(np.abs(fd.g - closed.g))),
        "max_gap_C": float(np.max(np.abs(fd.C - closed.C))),
        "normalization": fd.normalization,
        "note": ig.G22_NOTE,
    }
    sys.stdout.write(dumps(result))
    return 0


def cmd_transport(args) -> int:
    scenario = load_scenario(args.scenario)
    entries = transport_entries(scenario)
    rows = []
    for entry in entries:
        sc, gap = run_transport(scenario, entry)
        rows.append({
            "label": entry[0],
            "point": [float(v) for v in sc.point],
            "conn_a": entry[5],
            "conn_b": entry[6],
            "delta_lambda": sc.delta_lambda,
            "V": (gap / sc.delta_lambda).tolist(),
            "V_delta_lambda": gap.tolist(),
        })
    sys.stdout.write(dumps({"scenario": scenario.name, "transport": rows}))
    return 0


def cmd_list(args) -> int:
    print("\n".join(bundled_scenarios()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geoduel", description="Verify dual-connection geometry on coordinate charts.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="run the suites of a scenario")
    p.add_argument("scenario", help="scenario JSON file or bundled scenario name")
    p.add_argument("--out", help="write the JSON report here")
    p.add_argument("--json", action="store_true", help="print the JSON report instead of the summary")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: GEODUEL_THREADS or up to 4)")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("tensors", help="dump g, Gamma, T, S, Q, N, R and Ric at a scenario point")
    p.add_argument("scenario")
    p.add_argument("--point", type=int, required=True)
    p.add_argument("--connection", default=None)
    p.set_defaults(func=cmd_tensors)

    p = sub.add_parser("fisher", help="Fisher metric and cubic tensor of a built-in family")
    p.add_argument("family", choices=sorted(ig.FAMILIES))
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--nodes", type=int, default=64)
    p.set_defaults(func=cmd_fisher)

    p = sub.add_parser("transport", help="parallelogram gap vectors of the scenario's transport entries")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_transport)

    p = sub.add_parser("list", help="list bundled scenarios")
    p.set_defaults(func=cmd_list)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (GeoDuelError, FileNotFoundError) as exc:
        print(f"geoduel: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
