"""Dense tensors at a point with per-slot variance bookkeeping."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import BadPermutation, MixedVariance, SingularMetric, VarianceMismatch

MAX_DIM = 6
UP, DOWN = "u", "l"


def _perm_sign(p):
    sign = 1
    p = list(p)
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


@dataclass(frozen=True, eq=False)
class DenseTensor:
    """Rank-r array over an n-dimensional chart.

    ``variance`` is a string with one character per slot, ``"u"`` (upper) or
    ``"l"`` (lower).  ``data`` is a C-ordered ndarray of shape ``(n,)*rank``.
    """

    data: np.ndarray
    variance: str

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != len(self.variance):
            raise ValueError(f"rank {data.ndim} does not match variance {self.variance!r}")
        if any(s != data.shape[0] for s in data.shape):
            raise ValueError("all slots must share the chart dimension")
        if data.ndim and data.shape[0] > MAX_DIM:
            raise ValueError(f"chart dimension above {MAX_DIM} is not supported")
        if set(self.variance) - {UP, DOWN}:
            raise ValueError("variance markers must be 'u' or 'l'")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def rank(self):
        return self.data.ndim

    @property
    def dim(self):
        return self.data.shape[0] if self.data.ndim else 0

    @property
    def flat(self):
        return self.data.reshape(-1)

    def __add__(self, other):
        self._same_type(other)
        return DenseTensor(self.data + other.data, self.variance)

    def __sub__(self, other):
        self._same_type(other)
        return DenseTensor(self.data - other.data, self.variance)

    def __neg__(self):
        return DenseTensor(-self.data, self.variance)

    def __mul__(self, scalar):
        return DenseTensor(self.data * float(scalar), self.variance)

    __rmul__ = __mul__

    def _same_type(self, other):
        if self.variance != other.variance or self.data.shape != other.data.shape:
            raise VarianceMismatch(f"cannot combine {self.variance!r} with {other.variance!r}")

    def max_abs(self):
        return float(np.max(np.abs(self.data))) if self.data.size else 0.0

    def permute(self, perm):
        return permute(self, perm)

    def antisymmetrize(self, slots):
        return antisymmetrize(self, slots)

    def symmetrize(self, slots):
        return symmetrize(self, slots)

    def contract(self, a, b):
        return contract(self, a, b)


def permute(t: DenseTensor, perm) -> DenseTensor:
    """Move slot ``s`` of ``t`` to slot ``perm[s]`` of the result."""
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(t.rank)):
        raise BadPermutation(f"{perm} is not a permutation of 0..{t.rank - 1}")
    axes = np.argsort(perm)
    variance = "".join(t.variance[a] for a in axes)
    return DenseTensor(np.transpose(t.data, axes).copy(), variance)


def _check_slots(t, slots):
    slots = tuple(slots)
    if len(set(slots)) != len(slots) or any(s < 0 or s >= t.rank for s in slots):
        raise BadPermutation(f"bad slot set {slots} for rank {t.rank}")
    if len({t.variance[s] for s in slots}) > 1:
        raise MixedVariance(f"slots {slots} mix upper and lower indices")
    return slots


def _average_over(t, slots, signed):
    slots = _check_slots(t, slots)
    k = len(slots)
    acc = np.zeros_like(t.data)
    for p in itertools.permutations(range(k)):
        axes = list(range(t.rank))
        for src, dst in zip(slots, p):
            axes[src] = slots[dst]
        term = np.transpose(t.data, axes)
        acc = acc + (_perm_sign(p) * term if signed else term)
    return DenseTensor(acc / math.factorial(k), t.variance)


def antisymmetrize(t: DenseTensor, slots) -> DenseTensor:
    """Alternating average with weight 1/k!, so X_[ab] = (X_ab - X_ba)/2."""
    return _average_over(t, slots, signed=True)


def symmetrize(t: DenseTensor, slots) -> DenseTensor:
    return _average_over(t, slots, signed=False)


def contract(t: DenseTensor, slot_a: int, slot_b: int) -> DenseTensor:
    if slot_a == slot_b or not (0 <= slot_a < t.rank and 0 <= slot_b < t.rank):
        raise BadPermutation(f"cannot contract slots {slot_a}, {slot_b} of rank {t.rank}")
    if t.variance[slot_a] == t.variance[slot_b]:
        raise VarianceMismatch("contraction must pair an upper with a lower slot")
    out = np.trace(t.data, axis1=slot_a, axis2=slot_b)
    variance = "".join(v for s, v in enumerate(t.variance) if s not in (slot_a, slot_b))
    return DenseTensor(out, variance)


def _check_metric(metric: DenseTensor):
    if metric.rank != 2 or metric.variance not in ("ll", "uu"):
        raise VarianceMismatch("metric must be a rank-2 all-lower or all-upper tensor")
    m = metric.data
    if not np.array_equal(m, m.T):
        raise SingularMetric("metric is not symmetric")
    if abs(np.linalg.det(m)) <= 1e-10:
        raise SingularMetric("metric determinant vanishes")


def raise_lower(t: DenseTensor, slot: int, metric: DenseTensor) -> DenseTensor:
    """Lower an upper ``slot`` with g (variance "ll") or raise a lower one with g^-1 ("uu")."""
    _check_metric(metric)
    current = t.variance[slot]
    if metric.variance == "ll" and current != UP:
        raise VarianceMismatch(f"slot {slot} is already lower")
    if metric.variance == "uu" and current != DOWN:
        raise VarianceMismatch(f"slot {slot} is already upper")
    moved = np.tensordot(metric.data, t.data, axes=([1], [slot]))
    moved = np.moveaxis(moved, 0, slot)
    new = UP if current == DOWN else DOWN
    variance = t.variance[:slot] + new + t.variance[slot + 1:]
    return DenseTensor(moved, variance)


def levi_civita_symbol(n: int = 3, variance: str = None) -> DenseTensor:
    """Alternating symbol with eps[0,1,...,n-1] = +1."""
    data = np.zeros((n,) * n)
    for p in itertools.permutations(range(n)):
        data[p] = _perm_sign(p)
    return DenseTensor(data, variance or DOWN * n)


def outer(a: DenseTensor, b: DenseTensor) -> DenseTensor:
    return DenseTensor(np.multiply.outer(a.data, b.data), a.variance + b.variance)
