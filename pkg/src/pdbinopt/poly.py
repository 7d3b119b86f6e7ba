"""Sparse multilinear polynomials over binary variables.

A polynomial is stored as a constant plus a list of monomials, each monomial a
sorted tuple of distinct variable indices with a real coefficient.  Repeated
factors are collapsed on construction (``x_i**d == x_i`` on ``{0, 1}``), so the
stored form is the unique multilinear extension of the input.

Evaluation and gradients accept either one point of shape ``(n,)`` or a batch
of shape ``(B, n)``; every row of a batch is computed independently, so the
result for a row never depends on what else is in the batch.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

__all__ = ["MultilinearPolynomial", "PolynomialError", "DimensionError"]


class PolynomialError(ValueError):
    """Invalid polynomial construction input."""


class DimensionError(ValueError):
    """Point dimension does not match the polynomial."""


class MultilinearPolynomial:
    """Immutable sparse multilinear polynomial in ``n`` variables.

    Terms are kept sorted by their variable tuple so that floating-point sums
    are reproducible for a given polynomial.  Reordering the input terms may
    change the last bits of results; no compensated summation is used.
    """

    __slots__ = ("n", "terms", "constant", "_blocks", "_grad_matrix")

    def __init__(self, n: int, terms: dict[tuple[int, ...], float] | None = None,
                 constant: float = 0.0):
        if n < 0:
            raise PolynomialError(f"variable count must be non-negative, got {n}")
        self.n = int(n)
        self.constant = float(constant)
        clean = []
        for vars_, coeff in (terms or {}).items():
            vars_ = tuple(int(v) for v in vars_)
            if not vars_:
                raise PolynomialError("use `constant` for the empty monomial")
            if list(vars_) != sorted(set(vars_)):
                raise PolynomialError(f"term {vars_} is not sorted and duplicate-free")
            if vars_[0] < 0 or vars_[-1] >= n:
                raise PolynomialError(f"term {vars_} has an index outside [0, {n})")
            if coeff != 0.0:
                clean.append((vars_, float(coeff)))
        clean.sort(key=lambda t: t[0])
        self.terms: tuple[tuple[tuple[int, ...], float], ...] = tuple(clean)
        self._build_index()

    @classmethod
    def from_terms(cls, n: int, raw_terms: Iterable[tuple[Sequence[int], float]]
                   ) -> MultilinearPolynomial:
        """Build from ``(variable multiset, coefficient)`` pairs.

        Exponents are collapsed, duplicate monomials summed in input order and
        zero coefficients dropped.  An empty multiset contributes to the
        constant.
        """
        acc: dict[tuple[int, ...], float] = {}
        constant = 0.0
        for k, (vars_, coeff) in enumerate(raw_terms):
            key = tuple(sorted({int(v) for v in vars_}))
            if key and (key[0] < 0 or key[-1] >= n):
                raise PolynomialError(
                    f"term #{k} ({list(vars_)}, {coeff}) has an index outside [0, {n})")
            if not key:
                constant += float(coeff)
            else:
                acc[key] = acc.get(key, 0.0) + float(coeff)
        return cls(n, acc, constant)

    def _build_index(self) -> None:
        # Terms grouped by degree: (degree, index array (m, d), coefficients (m,)).
        by_degree: dict[int, list[tuple[tuple[int, ...], float]]] = {}
        for vars_, coeff in self.terms:
            by_degree.setdefault(len(vars_), []).append((vars_, coeff))
        blocks = []
        for d in sorted(by_degree):
            rows = by_degree[d]
            idx = np.array([v for v, _ in rows], dtype=np.intp).reshape(len(rows), d)
            coef = np.array([c for _, c in rows], dtype=float)
            blocks.append((d, idx, coef))
        self._blocks = blocks

        # Variable-to-term incidence: one row per (term, position) pair, carrying
        # the term coefficient into the column of that variable.  The gradient
        # is then (products of the other factors) @ this matrix.
        rows_total = sum(d * len(coef) for d, _, coef in blocks)
        data = np.empty(rows_total)
        cols = np.empty(rows_total, dtype=np.intp)
        offset = 0
        for d, idx, coef in blocks:
            m = len(coef)
            for j in range(d):
                data[offset:offset + m] = coef
                cols[offset:offset + m] = idx[:, j]
                offset += m
        # Stored transposed (n x rows) so the product is sparse @ dense.
        self._grad_matrix = sp.csr_matrix(
            (data, (cols, np.arange(rows_total))), shape=(self.n, rows_total))

    # -- basic properties -------------------------------------------------

    @property
    def degree(self) -> int:
        return max((len(v) for v, _ in self.terms), default=0)

    @property
    def num_terms(self) -> int:
        return len(self.terms)

    def is_constant(self) -> bool:
        return not self.terms

    def __neg__(self) -> MultilinearPolynomial:
        return MultilinearPolynomial(
            self.n, {v: -c for v, c in self.terms}, -self.constant)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MultilinearPolynomial):
            return NotImplemented
        return (self.n, self.terms, self.constant) == (other.n, other.terms, other.constant)

    def __hash__(self) -> int:
        return hash((self.n, self.terms, self.constant))

    def __repr__(self) -> str:
        return (f"MultilinearPolynomial(n={self.n}, terms={len(self.terms)}, "
                f"degree={self.degree}, constant={self.constant})")

    # -- numerics ----------------------------------------------------------

    def _as_batch(self, x) -> tuple[np.ndarray, bool]:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        batch = x[None, :] if single else x
        if batch.ndim != 2 or batch.shape[1] != self.n:
            raise DimensionError(f"expected points of length {self.n}, got shape {x.shape}")
        return batch, single

    def evaluate(self, x) -> float | np.ndarray:
        """Value ``constant + sum coeff * prod x_i`` at one point or a batch."""
        X, single = self._as_batch(x)
        out = np.full(X.shape[0], self.constant)
        for _, idx, coef in self._blocks:
            prods = np.prod(X[:, idx], axis=2)
            out += (prods * coef).sum(axis=1)
        return float(out[0]) if single else out

    def gradient(self, x) -> np.ndarray:
        """Analytic gradient, shape ``(n,)`` or ``(B, n)`` matching the input."""
        X, single = self._as_batch(x)
        B = X.shape[0]
        if not self._blocks:
            G = np.zeros((B, self.n))
            return G[0] if single else G
        parts = []
        for d, idx, _ in self._blocks:
            P = X[:, idx]  # (B, m, d)
            if d == 1:
                parts.append(np.ones((B, idx.shape[0])))
                continue
            # product of all factors except position j, via prefix/suffix
            # products so zeros in x are handled without division
            prefix = np.ones_like(P)
            suffix = np.ones_like(P)
            prefix[:, :, 1:] = np.cumprod(P[:, :, :-1], axis=2)
            suffix[:, :, :-1] = np.cumprod(P[:, :, :0:-1], axis=2)[:, :, ::-1]
            others = prefix * suffix
            for j in range(d):
                parts.append(others[:, :, j])
        others_all = np.concatenate(parts, axis=1)
        G = np.asarray((self._grad_matrix @ others_all.T).T)
        return G[0] if single else G

    def theta_upper_bound(self) -> float:
        """Upper bound on ``max over [0,1]^n of ||grad f||_1``.

        On the unit cube each partial derivative is bounded by the summed
        magnitudes of the coefficients of terms containing that variable.
        """
        return float(sum(abs(c) * len(v) for v, c in self.terms))
