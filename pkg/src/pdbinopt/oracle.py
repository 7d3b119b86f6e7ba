"""Exhaustive ground truth for small instances.

All routines tabulate the objective on every binary point.  For a polynomial
the table is built with a subset-sum (zeta) transform of the coefficient
vector, ``F(S) = sum_{T subset of S} a_T``, which touches each of the ``2^n``
points ``n`` times and shares no code with ``MultilinearPolynomial.evaluate``.
Bit ``i`` of a table index is the value of ``x_i``.
"""

from __future__ import annotations

import itertools
from typing import Callable

import numpy as np

from .poly import DimensionError, MultilinearPolynomial
from .problems import WeightedGraph

__all__ = [
    "CapacityError", "MAX_ENUM_VARS", "MAX_EXPECT_VARS", "truth_table",
    "brute_force_min", "expectation_extension", "theta_exact", "brute_force_kcut",
]

MAX_ENUM_VARS = 24
MAX_EXPECT_VARS = 20


class CapacityError(ValueError):
    """Instance too large for exhaustive enumeration."""


def truth_table(p: MultilinearPolynomial) -> np.ndarray:
    """Values of ``p`` on all ``2^n`` binary points, indexed by bitmask."""
    if p.n > MAX_ENUM_VARS:
        raise CapacityError(f"n={p.n} exceeds the enumeration cap {MAX_ENUM_VARS}")
    table = np.zeros(1 << p.n)
    table[0] = p.constant
    for vars_, coeff in p.terms:
        table[sum(1 << i for i in vars_)] += coeff
    for i in range(p.n):
        view = table.reshape(-1, 2, 1 << i)
        view[:, 1, :] += view[:, 0, :]
    return table


def _bits(mask: int, n: int) -> np.ndarray:
    return np.array([(mask >> i) & 1 for i in range(n)], dtype=np.int8)


def brute_force_min(p: MultilinearPolynomial) -> tuple[np.ndarray, float]:
    """Exact minimum over ``{0,1}^n``; ties go to the lexicographically smallest x."""
    table = truth_table(p)
    best = table.min()
    cand = np.flatnonzero(table == best)
    # lexicographic order compares x_0 first: keep candidates with x_i = 0
    # whenever any exist, for i = 0, 1, ...
    for i in range(p.n):
        zero = cand[(cand >> i) & 1 == 0]
        if zero.size:
            cand = zero
        if cand.size == 1:
            break
    return _bits(int(cand[0]), p.n), float(best)


def _bernoulli_weights(x: np.ndarray) -> np.ndarray:
    w = np.ones(1)
    for xi in x:
        w = np.concatenate([w * (1.0 - xi), w * xi])
    return w


def expectation_extension(F: MultilinearPolynomial | Callable, x) -> float:
    """``E[F(xi)]`` for independent ``xi_i ~ Bernoulli(x_i)``, by full enumeration.

    ``F`` is a polynomial or a callable on binary vectors (int8 arrays).
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n > MAX_EXPECT_VARS:
        raise CapacityError(f"n={n} exceeds the expectation cap {MAX_EXPECT_VARS}")
    if isinstance(F, MultilinearPolynomial):
        if F.n != n:
            raise DimensionError(f"point has length {n}, polynomial has n={F.n}")
        table = truth_table(F)
    else:
        table = np.array([F(_bits(m, n)) for m in range(1 << n)], dtype=float)
    return float(np.dot(_bernoulli_weights(x), table))


def theta_exact(p: MultilinearPolynomial) -> float:
    """``max over [0,1]^n of ||grad f||_1``, attained at a vertex.

    Each partial derivative is affine in every other coordinate and does not
    depend on its own, so ``|d_i f|`` and their sum are convex along every
    coordinate and the maximum over the cube sits at a vertex.  At a vertex
    ``d_i f = F(x with x_i=1) - F(x with x_i=0)``.
    """
    if p.n > MAX_EXPECT_VARS:
        raise CapacityError(f"n={p.n} exceeds the cap {MAX_EXPECT_VARS}")
    table = truth_table(p)
    total = np.zeros_like(table)
    for i in range(p.n):
        view = table.reshape(-1, 2, 1 << i)
        slope = np.abs(view[:, 1, :] - view[:, 0, :])
        tv = total.reshape(-1, 2, 1 << i)
        tv += slope[:, None, :]
    return float(total.max())


def brute_force_kcut(G: WeightedGraph, k: int) -> tuple[np.ndarray, float]:
    """Maximum k-way cut by enumerating all ``k^n`` labelings."""
    if k < 2:
        raise ValueError("k must be at least 2")
    if k ** G.n > 1 << MAX_EXPECT_VARS:
        raise CapacityError(f"{k}^{G.n} labelings exceed the enumeration cap")
    u, v, w = G.edge_arrays()
    labels = np.array(list(itertools.product(range(k), repeat=G.n)), dtype=np.int8)
    cut = ((labels[:, u] != labels[:, v]) * w).sum(axis=1)
    i = int(np.argmax(cut))
    return labels[i].copy(), float(cut[i])
