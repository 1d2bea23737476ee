"""Per-frequency reduction of the operator to an ODE in ``t``.

After a Fourier transform in the horizontal variables, a solution
``u(x, t) = w(t) exp(2 pi i xi . x)`` of ``L u = 0`` satisfies

    sum_{a,b} (-1)^a C_ab(xi) w^{(a+b)}(t) = 0,

with characteristic polynomial ``p(lam) = sum (-1)^a C_ab lam^{a+b}``.  The
decaying solutions on a half-line are spanned by ``t^r exp(lam t)`` where
``lam`` runs over the roots of ``p`` on one side of the imaginary axis.

Roots come from the companion matrix of the rescaled polynomial
``p(c mu) / c^{2m}`` with ``c = 2 pi |xi|``, so they are ``O(1)``.  Roots
closer than ``root_tol * c`` are merged by single-linkage clustering, and
each cluster mean is polished by Newton's method on ``p^{(mu - 1)}``, where
``mu`` is the cluster size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage

from .exppoly import ExpPoly
from .operators import CoefTensor, reduced_matrices

__all__ = [
    "ReducedSymbol",
    "ModeBasis",
    "EllipticityError",
    "DEFAULT_ROOT_TOL",
    "reduce",
    "clustered_roots",
    "mode_basis",
    "special_roots",
]

#: Default clustering tolerance, relative to ``2 pi |xi|``.
DEFAULT_ROOT_TOL = 1e-6


class EllipticityError(ValueError):
    """Raised when the symbol has a root on (or too close to) the imaginary axis."""


@dataclass(frozen=True, eq=False)
class ReducedSymbol:
    """Reduced symbol at one frequency.

    Attributes
    ----------
    xi : numpy.ndarray
        Nonzero frequency vector (cycles per unit length).
    C : numpy.ndarray
        ``(m+1) x (m+1)`` reduced form matrix.
    omega : numpy.ndarray
        Slice weights ``omega_a(xi)``; ``|grad^m w|^2 = sum omega_a |w^{(a)}|^2``.
    charpoly : numpy.ndarray
        Coefficients of ``p``, ascending: ``charpoly[k]`` multiplies ``lam^k``.
    """

    xi: np.ndarray
    C: np.ndarray
    omega: np.ndarray
    charpoly: np.ndarray

    @property
    def m(self) -> int:
        return self.C.shape[0] - 1

    @property
    def n(self) -> int:
        return self.xi.size

    @property
    def scale(self) -> float:
        """Natural root scale ``2 pi |xi|``."""
        return float(2 * np.pi * np.linalg.norm(self.xi))

    @property
    def lead(self) -> complex:
        return complex(self.charpoly[-1])

    def p(self, lam, derivative: int = 0):
        """Evaluate ``p`` or one of its derivatives."""
        coeffs = np.polynomial.polynomial.polyder(self.charpoly, derivative)
        return np.polynomial.polynomial.polyval(lam, coeffs)


@dataclass(frozen=True, eq=False)
class ModeBasis:
    """Decaying generalized exponentials ``t^r exp(lam t)`` for one side.

    Attributes
    ----------
    roots : tuple of (complex, int)
        Roots with multiplicities.  ``Re lam < 0`` for the upper half-space,
        ``Re lam > 0`` for the lower one.
    halfspace : str
        ``"upper"`` or ``"lower"``.
    """

    roots: tuple
    halfspace: str = "upper"

    @property
    def dim(self) -> int:
        return sum(mult for _, mult in self.roots)

    @property
    def terms(self) -> list[tuple[complex, int]]:
        """``(rate, power)`` of every basis function, in basis order."""
        return [(lam, r) for lam, mult in self.roots for r in range(mult)]

    def functions(self) -> list[ExpPoly]:
        return [ExpPoly.term(lam, r) for lam, r in self.terms]

    def combination(self, f) -> ExpPoly:
        """The mode solution ``sum_k f_k t^{r_k} exp(lam_k t)``."""
        f = np.asarray(f, dtype=complex)
        lam = [l for l, _ in self.terms]
        pw = [r for _, r in self.terms]
        return ExpPoly(f, pw, lam)

    @property
    def slowest_rate(self) -> float:
        """Smallest ``|Re lam|`` over the basis."""
        return float(min(abs(lam.real) for lam, _ in self.roots))


def reduce(A: CoefTensor, xi) -> ReducedSymbol:
    """Reduce ``A`` at frequency ``xi``.

    Raises
    ------
    ValueError
        If ``xi`` is zero.
    """
    xi = np.asarray(xi, dtype=float).reshape(-1)
    if not np.any(xi != 0):
        raise ValueError("zero frequency is excluded")
    C, omega = reduced_matrices(A, xi)
    m = A.m
    p = np.zeros(2 * m + 1, dtype=complex)
    for a in range(m + 1):
        for b in range(m + 1):
            p[a + b] += (-1) ** a * C[a, b]
    return ReducedSymbol(xi=xi, C=C, omega=omega, charpoly=p)


def _polish(sym: ReducedSymbol, lam: complex, mult: int, iters: int = 4) -> complex:
    """Newton iteration on ``p^{(mult-1)}``, where ``lam`` is a simple root."""
    d0 = np.polynomial.polynomial.polyder(sym.charpoly, mult - 1)
    d1 = np.polynomial.polynomial.polyder(d0)
    pv = np.polynomial.polynomial.polyval
    x = lam
    for _ in range(iters):
        den = pv(x, d1)
        if den == 0:
            break
        step = pv(x, d0) / den
        if not np.isfinite(step) or abs(step) > 1e-3 * max(sym.scale, abs(x)):
            break
        x = x - step
    return complex(x)


def clustered_roots(sym: ReducedSymbol, root_tol: float = DEFAULT_ROOT_TOL) -> list[tuple[complex, int]]:
    """All ``2m`` roots of ``p`` grouped into ``(root, multiplicity)`` pairs.

    Parameters
    ----------
    root_tol : float
        Roots closer than ``root_tol * 2 pi |xi|`` are merged.
    """
    c = sym.scale
    if sym.charpoly[-1] == 0:
        raise EllipticityError("degenerate characteristic polynomial (C_mm = 0)")
    scaled = sym.charpoly * c ** np.arange(sym.charpoly.size)
    scaled = scaled / scaled[-1]
    mus = np.roots(scaled[::-1])
    if mus.size == 1:
        groups = [mus]
    else:
        pts = np.column_stack([mus.real, mus.imag])
        labels = fcluster(linkage(pts, method="single"), t=root_tol, criterion="distance")
        groups = [mus[labels == k] for k in np.unique(labels)]
    out = []
    for g in groups:
        lam = c * complex(np.mean(g))
        mult = int(g.size)
        out.append((_polish(sym, lam, mult), mult))
    out.sort(key=lambda rm: (rm[0].real, rm[0].imag))
    return out


def mode_basis(sym: ReducedSymbol, halfspace: str = "upper", root_tol: float = DEFAULT_ROOT_TOL) -> ModeBasis:
    """Decaying mode basis on the upper (``t > 0``) or lower (``t < 0``) side.

    Raises
    ------
    EllipticityError
        If a root lies within ``root_tol * 2 pi |xi|`` of the imaginary axis,
        or the requested side does not carry exactly ``m`` roots.
    """
    if halfspace not in ("upper", "lower"):
        raise ValueError("halfspace must be 'upper' or 'lower'")
    roots = clustered_roots(sym, root_tol)
    tol = root_tol * sym.scale
    for lam, _ in roots:
        if abs(lam.real) <= tol:
            raise EllipticityError(
                f"root {lam:.6g} within {tol:.3g} of the imaginary axis at xi={sym.xi}"
            )
    sign = -1 if halfspace == "upper" else 1
    side = tuple((lam, mult) for lam, mult in roots if np.sign(lam.real) == sign)
    total = sum(mult for _, mult in side)
    if total != sym.m:
        raise EllipticityError(
            f"{total} roots on the {halfspace} side, expected {sym.m} at xi={sym.xi}"
        )
    return ModeBasis(side, halfspace)


def special_roots(xi, m: int) -> ModeBasis:
    """Closed-form upper roots ``2 pi i |xi| exp(i pi k / (m+1))``, ``k = 1..m``."""
    r = np.linalg.norm(np.asarray(xi, dtype=float))
    if r == 0:
        raise ValueError("zero frequency is excluded")
    k = np.arange(1, m + 1)
    lams = 2j * np.pi * r * np.exp(1j * np.pi * k / (m + 1))
    return ModeBasis(tuple((complex(l), 1) for l in lams), "upper")
