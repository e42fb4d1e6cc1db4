"""Random smooth test fields written as expression strings.

Used by the property tests and by scenario ``random`` connection kinds.  Every
field is a low-degree polynomial so it can be parsed, differentiated by jets
and cross-checked by finite differences.
"""
from __future__ import annotations

import itertools

import numpy as np

from .connections import DistortedConnection, ExplicitConnection, parse_grid3
from .expr import parse_expr
from .geometry import MetricField


def coords(n):
    return [f"x{i}" for i in range(n)]


def random_polynomial(rng: np.random.Generator, n: int, degree: int = 2, scale: float = 0.5) -> str:
    terms = []
    for deg in range(degree + 1):
        for mono in itertools.combinations_with_replacement(range(n), deg):
            c = rng.uniform(-scale, scale)
            factors = [repr(float(c))] + [f"x{v}" for v in mono]
            terms.append("*".join(factors))
    return " + ".join(f"({t})" for t in terms)


def random_metric_strings(rng, n, eps=0.1, degree=2):
    """g = I + eps * (symmetric polynomial perturbation); positive-definite near the unit box."""
    grid = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            p = random_polynomial(rng, n, degree, 0.5)
            s = f"{eps!r}*({p})"
            grid[i][j] = grid[j][i] = (f"1 + {s}" if i == j else s)
    return grid


def random_grid3_strings(rng, n, degree=2, scale=0.5):
    return [[[random_polynomial(rng, n, degree, scale) for _ in range(n)] for _ in range(n)] for _ in range(n)]


def random_point(rng, n, box=0.5):
    return rng.uniform(-box, box, size=n)


def random_metric(rng, n, eps=0.1, degree=2) -> MetricField:
    while True:
        grid = random_metric_strings(rng, n, eps, degree)
        field = MetricField.parse(grid, coords(n))
        # reject the (rare) draws that are not comfortably positive-definite
        probe = [field.jets(random_point(rng, n, 1.0)).g for _ in range(4)]
        if all(np.linalg.eigvalsh(g).min() > 0.3 for g in probe):
            return field


def random_distorted(rng, n, metric: MetricField = None, lowered=False, degree=2):
    metric = metric or random_metric(rng, n)
    grid = parse_grid3(random_grid3_strings(rng, n, degree), coords(n))
    return DistortedConnection(metric, grid, lowered=lowered)


def random_explicit(rng, n, degree=2, scale=0.5):
    return ExplicitConnection(parse_grid3(random_grid3_strings(rng, n, degree, scale), coords(n)))


def random_symmetric_explicit(rng, n, degree=2, scale=0.5):
    """Torsion-free connection with random polynomial coefficients."""
    g = random_grid3_strings(rng, n, degree, scale)
    for k in range(n):
        for i in range(n):
            for j in range(i + 1, n):
                g[k][j][i] = g[k][i][j]
    return ExplicitConnection(parse_grid3(g, coords(n)))


def random_scalar(rng, n, degree=3, scale=0.5):
    return parse_expr(random_polynomial(rng, n, degree, scale), coords(n))
