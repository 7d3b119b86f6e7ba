"""Binarity constraint functions.

Each function ``g`` is convex and continuous on ``[0, 1]``, vanishes exactly at
0 and 1, is symmetric about 1/2 and has its only interior critical point there.
Driving ``g(x_i)`` to zero therefore forces ``x_i`` to be binary.

Three kinds are available, selected by name:

* ``"quadratic"``: ``x**2 - x`` (the default)
* ``"entropy"``: ``x log x + (1 - x) log(1 - x)`` with ``0 log 0 = 0``
* ``"evenpoly:<d>"``: ``(2x - 1)**(2d) - 1``

The simplex forms used for k-way partitions act on a column of a
column-stochastic matrix: ``sum X_j**2 - 1`` and ``sum X_j log X_j``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

__all__ = ["ConstraintFunction", "DomainError", "ENTROPY_CLAMP"]

# Iterates are clamped to [ENTROPY_CLAMP, 1 - ENTROPY_CLAMP] when the entropy
# kind is active, since its derivative is unbounded at the endpoints.
ENTROPY_CLAMP = 1e-12

_SIMPLEX_TOL = 1e-9

KINDS = ("quadratic", "entropy", "even_poly")


class DomainError(ValueError):
    """Argument outside the domain of a constraint function."""


@dataclass(frozen=True)
class ConstraintFunction:
    kind: str = "quadratic"
    d: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown constraint kind {self.kind!r}")
        if self.kind == "even_poly" and (int(self.d) != self.d or self.d < 1):
            raise ValueError(f"even_poly degree must be a positive integer, got {self.d}")

    @classmethod
    def parse(cls, name: str) -> ConstraintFunction:
        """Parse ``"quadratic"``, ``"entropy"`` or ``"evenpoly:<d>"``."""
        name = name.strip().lower()
        if name in ("quadratic", "entropy"):
            return cls(name)
        if name.startswith("evenpoly"):
            _, _, d = name.partition(":")
            try:
                return cls("even_poly", int(d) if d else 1)
            except ValueError:
                raise ValueError(f"bad even-polynomial degree in {name!r}") from None
        raise ValueError(f"unknown constraint function {name!r}")

    @property
    def name(self) -> str:
        return f"evenpoly:{self.d}" if self.kind == "even_poly" else self.kind

    @property
    def finite_endpoint_slope(self) -> bool:
        return self.kind != "entropy"

    # -- scalar form -------------------------------------------------------

    def value(self, x):
        """``g(x)`` for ``x`` in ``[0, 1]`` (scalar or array)."""
        arr = np.asarray(x, dtype=float)
        if np.any(~((arr >= 0.0) & (arr <= 1.0))):
            raise DomainError(f"g is defined on [0, 1], got {x}")
        out = self._value(arr)
        return float(out) if out.ndim == 0 else out

    def deriv(self, x):
        """``g'(x)``; the entropy kind requires ``0 < x < 1``."""
        arr = np.asarray(x, dtype=float)
        if self.kind == "entropy":
            ok = (arr > 0.0) & (arr < 1.0)
        else:
            ok = (arr >= 0.0) & (arr <= 1.0)
        if np.any(~ok):
            raise DomainError(f"g' of kind {self.kind} undefined at {x}")
        out = self._deriv(arr)
        return float(out) if out.ndim == 0 else out

    def _value(self, x: np.ndarray) -> np.ndarray:
        # unchecked; used in the solver hot loop
        if self.kind == "quadratic":
            return x * x - x
        if self.kind == "entropy":
            return xlogy(x, x) + xlogy(1.0 - x, 1.0 - x)
        return (2.0 * x - 1.0) ** (2 * self.d) - 1.0

    def _deriv(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "quadratic":
            return 2.0 * x - 1.0
        if self.kind == "entropy":
            return np.log(x) - np.log1p(-x)
        return 4.0 * self.d * (2.0 * x - 1.0) ** (2 * self.d - 1)

    # -- simplex-column form -----------------------------------------------

    def _check_simplex(self, col) -> np.ndarray:
        col = np.asarray(col, dtype=float)
        if col.ndim != 1 or col.size == 0:
            raise DomainError("simplex column must be a non-empty vector")
        if np.any(col < 0.0) or abs(col.sum() - 1.0) > _SIMPLEX_TOL:
            raise DomainError(f"{col} is not on the probability simplex")
        return col

    def simplex_value(self, col) -> float:
        col = self._check_simplex(col)
        return float(self._simplex_value(col[:, None])[0])

    def simplex_grad(self, col) -> np.ndarray:
        col = self._check_simplex(col)
        if self.kind == "entropy" and np.any(col <= 0.0):
            raise DomainError("entropy gradient needs strictly positive entries")
        return self._simplex_grad(col)

    def _simplex_value(self, X: np.ndarray, axis: int = 0) -> np.ndarray:
        # value per column, reducing over the category axis
        if self.kind == "entropy":
            return xlogy(X, X).sum(axis=axis)
        if self.kind == "quadratic":
            return (X * X).sum(axis=axis) - 1.0
        raise DomainError("even_poly has no simplex form")

    def _simplex_grad(self, X: np.ndarray) -> np.ndarray:
        if self.kind == "entropy":
            return 1.0 + np.log(X)
        if self.kind == "quadratic":
            return 2.0 * X
        raise DomainError("even_poly has no simplex form")
