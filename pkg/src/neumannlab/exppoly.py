"""Exponential polynomials ``sum_k c_k t^{q_k} exp(r_k t)`` on a half-line.

Every per-frequency object in the package (mode solutions, fundamental
solutions, layer potentials) is such a sum, so derivatives, evaluation and
weighted ``L^2(0, inf)`` inner products are all exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

__all__ = ["ExpPoly", "gram_integral"]


def gram_integral(lam: complex, mu: complex, p: int, q: int, weight: int = 0) -> complex:
    """Closed form of ``int_0^inf t^(p+q+w) exp((lam + conj(mu)) t) dt``.

    Parameters
    ----------
    lam, mu : complex
        Exponential rates; ``mu`` enters conjugated.
    p, q : int
        Polynomial powers attached to ``lam`` and ``mu``.
    weight : int
        Extra power ``w`` of ``t`` (0 for weight 1, 1 for weight ``t``).

    Returns
    -------
    complex
        ``(p+q+w)! / (-(lam + conj(mu)))^(p+q+w+1)``.

    Raises
    ------
    ValueError
        If ``Re(lam + conj(mu)) >= 0`` (the integral diverges).
    """
    s = complex(lam) + np.conj(complex(mu))
    if not s.real < 0:
        raise ValueError(f"nondecaying pair: Re(lam + conj(mu)) = {s.real}")
    k = int(p) + int(q) + int(weight)
    return factorial(k) / (-s) ** (k + 1)


@dataclass(frozen=True)
class ExpPoly:
    """Finite sum of terms ``coef * t**power * exp(rate * t)``.

    Terms with equal ``(rate, power)`` are merged on construction, comparing
    rates exactly; callers pass rates that come from one shared root list.
    """

    coef: np.ndarray
    power: np.ndarray
    rate: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coef, dtype=complex))
        q = np.atleast_1d(np.asarray(self.power, dtype=int))
        r = np.atleast_1d(np.asarray(self.rate, dtype=complex))
        if not (c.shape == q.shape == r.shape and c.ndim == 1):
            raise ValueError("coef, power and rate must be 1-d of equal length")
        merged: dict[tuple[complex, int], complex] = {}
        for ck, qk, rk in zip(c, q, r):
            key = (complex(rk), int(qk))
            merged[key] = merged.get(key, 0j) + ck
        keys = list(merged)
        object.__setattr__(self, "coef", np.array([merged[k] for k in keys], dtype=complex))
        object.__setattr__(self, "power", np.array([k[1] for k in keys], dtype=int))
        object.__setattr__(self, "rate", np.array([k[0] for k in keys], dtype=complex))

    # construction -----------------------------------------------------
    @classmethod
    def zero(cls) -> "ExpPoly":
        return cls(np.zeros(0, complex), np.zeros(0, int), np.zeros(0, complex))

    @classmethod
    def term(cls, rate: complex, power: int = 0, coef: complex = 1.0) -> "ExpPoly":
        return cls([coef], [power], [rate])

    # algebra ----------------------------------------------------------
    def __add__(self, other: "ExpPoly") -> "ExpPoly":
        return ExpPoly(
            np.concatenate([self.coef, other.coef]),
            np.concatenate([self.power, other.power]),
            np.concatenate([self.rate, other.rate]),
        )

    def __sub__(self, other: "ExpPoly") -> "ExpPoly":
        return self + (-other)

    def __neg__(self) -> "ExpPoly":
        return ExpPoly(-self.coef, self.power, self.rate)

    def __mul__(self, scalar) -> "ExpPoly":
        return ExpPoly(self.coef * complex(scalar), self.power, self.rate)

    __rmul__ = __mul__

    def derivative(self, k: int = 1) -> "ExpPoly":
        """The ``k``-th derivative in ``t``."""
        out = self
        for _ in range(k):
            c, q, r = out.coef, out.power, out.rate
            keep = q > 0
            out = ExpPoly(
                np.concatenate([c * r, (c * q)[keep]]),
                np.concatenate([q, q[keep] - 1]),
                np.concatenate([r, r[keep]]),
            )
        return out

    def reflect(self) -> "ExpPoly":
        """The function ``t -> self(-t)``."""
        return ExpPoly(self.coef * (-1.0) ** self.power, self.power, -self.rate)

    # evaluation -------------------------------------------------------
    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        tt = t[..., None]
        vals = self.coef * tt**self.power * np.exp(self.rate * tt)
        return vals.sum(axis=-1)

    def derivatives_at(self, t: float, upto: int) -> np.ndarray:
        """Values of the derivatives of order ``0..upto`` at a single ``t``."""
        out = np.empty(upto + 1, dtype=complex)
        f = self
        for j in range(upto + 1):
            out[j] = f(t)
            if j < upto:
                f = f.derivative()
        return out

    def decays(self) -> bool:
        """True when every term decays as ``t -> +inf``."""
        return bool(np.all(self.rate.real < 0))

    def inner(self, other: "ExpPoly", weight: int = 0) -> complex:
        """``int_0^inf conj(self) * other * t**weight dt`` in closed form."""
        total = 0j
        for ci, qi, ri in zip(self.coef, self.power, self.rate):
            for cj, qj, rj in zip(other.coef, other.power, other.rate):
                total += np.conj(ci) * cj * gram_integral(rj, ri, qj, qi, weight)
        return total
