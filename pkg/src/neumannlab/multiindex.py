"""Multiindices in R^{n+1} and dense arrays indexed by them.

Canonical order
---------------
Multiindices of a fixed order and dimension are listed in lexicographic
order of their exponent vectors, *descending* in the first coordinate, then
descending in the second, and so on.  For dimension 2 and order 2 this gives
``[(2, 0), (1, 1), (0, 2)]``.  Every array in the package uses this layout.

The last coordinate is the vertical (normal) direction ``t``; the first
``dim - 1`` coordinates are the horizontal directions.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial, prod

import numpy as np

__all__ = [
    "MultiIndex",
    "MIArray",
    "enumerate_multiindices",
    "count",
    "index_of",
    "multinomial",
    "inner",
]

MultiIndex = tuple[int, ...]


def _generate(dim: int, order: int):
    if dim == 1:
        yield (order,)
        return
    for first in range(order, -1, -1):
        for rest in _generate(dim - 1, order - first):
            yield (first,) + rest


@lru_cache(maxsize=None)
def _table(dim: int, order: int) -> tuple[tuple[MultiIndex, ...], dict]:
    items = tuple(_generate(dim, order))
    return items, {alpha: k for k, alpha in enumerate(items)}


def enumerate_multiindices(dim: int, order: int) -> list[MultiIndex]:
    """All multiindices of the given order in ``dim`` variables.

    Parameters
    ----------
    dim : int
        Number of variables (``n + 1`` for the half-space ``R^{n+1}_+``).
    order : int
        Common order ``|alpha|``.

    Returns
    -------
    list of tuple of int
        Multiindices in canonical order, without duplicates.

    Examples
    --------
    >>> enumerate_multiindices(2, 2)
    [(2, 0), (1, 1), (0, 2)]
    """
    if dim < 1:
        raise ValueError("dim must be at least 1")
    if order < 0:
        raise ValueError("order must be nonnegative")
    return list(_table(dim, order)[0])


def count(dim: int, order: int) -> int:
    """Number of multiindices of ``order`` in ``dim`` variables."""
    return comb(order + dim - 1, dim - 1)


def index_of(alpha) -> int:
    """Position of ``alpha`` in the canonical order of its dimension and order."""
    alpha = tuple(int(a) for a in alpha)
    if any(a < 0 for a in alpha):
        raise ValueError(f"negative exponent in {alpha}")
    return _table(len(alpha), sum(alpha))[1][alpha]


def multinomial(alpha) -> int:
    """Multinomial coefficient ``|alpha|! / alpha!``.

    >>> multinomial((1, 1, 1))
    6
    """
    alpha = tuple(int(a) for a in alpha)
    return factorial(sum(alpha)) // prod(factorial(a) for a in alpha)


@dataclass(frozen=True)
class MIArray:
    """A dense complex array indexed by multiindices of one order.

    Attributes
    ----------
    order : int
        Order ``m`` of the indexing multiindices.
    dim : int
        Number of variables ``n + 1``.
    values : numpy.ndarray
        Complex vector of length ``C(m + n, n)`` in canonical order.
    """

    order: int
    dim: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex).reshape(-1)
        if vals.size != count(self.dim, self.order):
            raise ValueError(
                f"expected {count(self.dim, self.order)} values for order "
                f"{self.order} in dimension {self.dim}, got {vals.size}"
            )
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, dim: int, order: int) -> "MIArray":
        return cls(order, dim, np.zeros(count(dim, order), dtype=complex))

    @classmethod
    def unit(cls, alpha) -> "MIArray":
        alpha = tuple(alpha)
        arr = cls.zeros(len(alpha), sum(alpha))
        arr.values[index_of(alpha)] = 1.0
        return arr

    @property
    def multiindices(self) -> list[MultiIndex]:
        return enumerate_multiindices(self.dim, self.order)

    def __getitem__(self, alpha) -> complex:
        return self.values[index_of(alpha)]

    def __len__(self) -> int:
        return self.values.size


def inner(F: MIArray, G: MIArray) -> complex:
    """Inner product ``sum_zeta conj(F_zeta) G_zeta``.

    The first argument is conjugated.

    Raises
    ------
    ValueError
        If the arrays differ in order or dimension.
    """
    if (F.order, F.dim) != (G.order, G.dim):
        raise ValueError(
            f"shape mismatch: order/dim {(F.order, F.dim)} vs {(G.order, G.dim)}"
        )
    return complex(np.vdot(F.values, G.values))
