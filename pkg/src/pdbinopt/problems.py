"""Reductions from graph and satisfiability problems to minimization polynomials.

Every reduction returns a polynomial to be *minimized*.  Maximization problems
(Max-Cut, MIS) are returned negated; the matching decoder reports the value in
the problem's own sense.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from .poly import DimensionError, MultilinearPolynomial

__all__ = [
    "WeightedGraph", "GraphError", "CnfFormula", "CnfError", "ProblemKind",
    "maxcut_to_poly", "mis_to_poly", "cnf_to_poly",
    "decode_cut", "decode_mis", "decode_sat",
]

log = logging.getLogger(__name__)


class GraphError(ValueError):
    pass


class CnfError(ValueError):
    pass


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected simple graph with real edge weights.

    Edges are normalized to ``u < v``; self-loops and repeated pairs are
    rejected.
    """

    n: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        if self.n < 0:
            raise GraphError("node count must be non-negative")
        seen = set()
        norm = []
        for e in self.edges:
            u, v, *rest = e
            w = float(rest[0]) if rest else 1.0
            u, v = int(u), int(v)
            if u == v:
                raise GraphError(f"self-loop at node {u}")
            if u > v:
                u, v = v, u
            if u < 0 or v >= self.n:
                raise GraphError(f"edge ({u}, {v}) outside [0, {self.n})")
            if (u, v) in seen:
                raise GraphError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))
            norm.append((u, v, w))
        object.__setattr__(self, "edges", tuple(norm))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable) -> WeightedGraph:
        return cls(n, tuple(edges))

    @property
    def m(self) -> int:
        return len(self.edges)

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if not self.edges:
            return np.zeros(0, int), np.zeros(0, int), np.zeros(0)
        u, v, w = zip(*self.edges)
        return np.array(u), np.array(v), np.array(w, dtype=float)

    def adjacency(self) -> sp.csr_matrix:
        """Symmetric weighted adjacency matrix with zero diagonal."""
        u, v, w = self.edge_arrays()
        A = sp.coo_matrix((np.r_[w, w], (np.r_[u, v], np.r_[v, u])), shape=(self.n, self.n))
        return A.tocsr()

    def degrees(self) -> np.ndarray:
        u, v, _ = self.edge_arrays()
        return np.bincount(np.r_[u, v], minlength=self.n)


@dataclass(frozen=True)
class CnfFormula:
    """CNF formula; a literal is ``(variable index, negated)``.

    Duplicate literals inside a clause are merged and clauses containing both
    ``x`` and ``not x`` are dropped; ``tautologies_dropped`` counts them.
    """

    n_vars: int
    clauses: tuple[tuple[tuple[int, bool], ...], ...]
    tautologies_dropped: int = 0

    @classmethod
    def from_clauses(cls, n_vars: int, clauses: Iterable[Iterable]) -> CnfFormula:
        """Build from clauses of ``(var, negated)`` pairs or signed 1-based ints."""
        kept = []
        dropped = 0
        for j, clause in enumerate(clauses):
            lits = []
            for lit in clause:
                if isinstance(lit, tuple):
                    var, neg = int(lit[0]), bool(lit[1])
                else:
                    lit = int(lit)
                    if lit == 0:
                        raise CnfError(f"clause {j}: 0 is not a literal")
                    var, neg = abs(lit) - 1, lit < 0
                if not 0 <= var < n_vars:
                    raise CnfError(f"clause {j}: variable {var} outside [0, {n_vars})")
                lits.append((var, neg))
            if not lits:
                raise CnfError(f"clause {j} is empty")
            uniq = dict.fromkeys(lits)
            vars_ = [v for v, _ in uniq]
            if len(set(vars_)) != len(vars_):
                dropped += 1
                continue
            kept.append(tuple(uniq))
        return cls(n_vars, tuple(kept), dropped)

    @property
    def m(self) -> int:
        return len(self.clauses)

    @property
    def k_max(self) -> int:
        return max((len(c) for c in self.clauses), default=0)


@dataclass(frozen=True)
class ProblemKind:
    name: str
    lam: float = 4.0
    k: int = 3

    def __post_init__(self):
        if self.name not in ("maxcut", "mis", "maxksat", "maxkcut"):
            raise ValueError(f"unknown problem {self.name!r}")
        if self.name == "mis" and not self.lam > 0:
            raise ValueError("MIS penalty lambda must be positive")
        if self.name == "maxkcut" and self.k < 2:
            raise ValueError("k must be at least 2")

    @property
    def sense(self) -> str:
        return "min" if self.name == "maxksat" else "max"


def maxcut_to_poly(G: WeightedGraph) -> MultilinearPolynomial:
    """Negated cut weight ``-sum w (x_u + x_v - 2 x_u x_v)``."""
    raw = []
    for u, v, w in G.edges:
        raw += [((u,), -w), ((v,), -w), ((u, v), 2.0 * w)]
    return MultilinearPolynomial.from_terms(G.n, raw)


def mis_to_poly(G: WeightedGraph, lam: float = 4.0) -> MultilinearPolynomial:
    """``-sum x_i + lam * sum_{edges} x_u x_v``; edge weights are ignored."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    raw = [((i,), -1.0) for i in range(G.n)]
    raw += [((u, v), float(lam)) for u, v, _ in G.edges]
    return MultilinearPolynomial.from_terms(G.n, raw)


def cnf_to_poly(F: CnfFormula) -> MultilinearPolynomial:
    """Number of unsatisfied clauses as a multilinear polynomial.

    A clause is unsatisfied exactly when every literal is false, so it
    contributes ``prod_{negated} x_i * prod_{positive} (1 - x_i)``, which is
    expanded over subsets of the positive literals.
    """
    if F.tautologies_dropped:
        log.warning("%d tautological clauses were dropped", F.tautologies_dropped)
    raw = []
    for clause in F.clauses:
        neg = [v for v, is_neg in clause if is_neg]
        pos = [v for v, is_neg in clause if not is_neg]
        for r in range(len(pos) + 1):
            sign = -1.0 if r % 2 else 1.0
            for sub in itertools.combinations(pos, r):
                raw.append((neg + list(sub), sign))
    return MultilinearPolynomial.from_terms(F.n_vars, raw)


def _binary(x, n: int) -> np.ndarray:
    x = np.asarray(x)
    if x.shape != (n,):
        raise DimensionError(f"expected a vector of length {n}, got shape {x.shape}")
    return x.astype(bool)


def decode_cut(x, G: WeightedGraph) -> float:
    """Total weight of edges whose endpoints get different labels."""
    x = _binary(x, G.n)
    u, v, w = G.edge_arrays()
    return float(w[x[u] != x[v]].sum())


def decode_mis(x, G: WeightedGraph) -> tuple[int, bool]:
    """``(set size, independent?)``; infeasible sets are reported, not repaired."""
    x = _binary(x, G.n)
    u, v, _ = G.edge_arrays()
    return int(x.sum()), not bool(np.any(x[u] & x[v]))


def decode_sat(x, F: CnfFormula) -> int:
    """Number of clauses with no true literal."""
    x = _binary(x, F.n_vars)
    unsat = 0
    for clause in F.clauses:
        if not any(x[v] != neg for v, neg in clause):
            unsat += 1
    return unsat
