"""First-order parallel transport and the parallelogram (pentagon) gap."""
from __future__ import annotations

from dataclasses import dataclass

import math

import numpy as np

from .geometry import ConnectionJets


@dataclass(frozen=True, eq=False)
class TransportScenario:
    point: np.ndarray
    u: np.ndarray
    u_tilde: np.ndarray
    delta_lambda: float
    conn_a: ConnectionJets
    conn_b: ConnectionJets

    def __post_init__(self):
        if not self.delta_lambda > 0:
            raise ValueError("delta_lambda must be positive")
        for name in ("u", "u_tilde"):
            v = np.asarray(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(v)):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, v)


def transport_correction(cj: ConnectionJets, v, direction) -> np.ndarray:
    """Gamma^i_jk v^j dir^k, each component summed with a correctly rounded fsum.

    Exact rounding makes the sum independent of term order, so pairs whose
    coefficients are index swaps of each other give bit-identical corrections.
    """
    v = np.asarray(v, dtype=float)
    d = np.asarray(direction, dtype=float)
    outer = np.multiply.outer(v, d)
    return np.array([math.fsum((g * outer).ravel()) for g in cj.gamma])


def first_order_transport(cj: ConnectionJets, v, direction) -> np.ndarray:
    """v'^i = v^i - Gamma^i_jk v^j dir^k (the step length is folded into ``direction``)."""
    return np.asarray(v, dtype=float) - transport_correction(cj, v, direction)


def parallelogram_gap(sc: TransportScenario) -> np.ndarray:
    """V^i delta_lambda = (u~ + u') - (u + u~').

    u is carried along u~ with ``conn_b`` and u~ along u with ``conn_a``, which
    gives V^i = (Gamma_a^i_jk - Gamma_b^i_kj) u~^j u^k.  The unmoved vectors
    cancel identically, so only the two corrections are differenced.
    """
    moved_u = transport_correction(sc.conn_b, sc.u, sc.u_tilde)
    moved_ut = transport_correction(sc.conn_a, sc.u_tilde, sc.u)
    return sc.delta_lambda * (moved_ut - moved_u)


def gap_vector(conn_a: ConnectionJets, conn_b: ConnectionJets, u, u_tilde) -> np.ndarray:
    """Closed form V^i = (Gamma_a^i_jk - Gamma_b^i_kj) u~^j u^k."""
    m = conn_a.gamma - np.swapaxes(conn_b.gamma, 1, 2)
    return np.einsum("ijk,j,k->i", m, np.asarray(u_tilde, dtype=float), np.asarray(u, dtype=float))
