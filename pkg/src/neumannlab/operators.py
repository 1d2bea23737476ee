"""Coefficient tensors, built-in operator families and ellipticity diagnostics.

A coefficient tensor ``A`` of half-order ``m`` in ``R^{n+1}`` is a square
complex matrix indexed by pairs of multiindices of order ``m`` in ``n + 1``
variables.  It defines the sesquilinear form
``<grad^m psi, A grad^m u> = sum conj(d^alpha psi) A_{alpha beta} d^beta u``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg
from scipy.stats import qmc, norm as _normal

from .multiindex import count, enumerate_multiindices, index_of, multinomial

__all__ = [
    "CoefTensor",
    "EllipticityReport",
    "make_special_operator",
    "make_biharmonic_rho",
    "check_self_adjoint",
    "slice_ellipticity",
    "sphere_directions",
    "reduced_matrices",
]


@dataclass(frozen=True, eq=False)
class CoefTensor:
    """Constant coefficient tensor of an order-``2m`` operator in ``R^{n+1}``.

    Attributes
    ----------
    n : int
        Horizontal dimension.
    m : int
        Half-order of the operator.
    entries : numpy.ndarray
        Complex ``K x K`` matrix with ``K = C(m+n, n)``, rows and columns in
        canonical multiindex order.
    """

    n: int
    m: int
    entries: np.ndarray

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("n and m must be positive")
        e = np.array(self.entries, dtype=complex)
        k = count(self.n + 1, self.m)
        if e.shape != (k, k):
            raise ValueError(f"entries must be {k}x{k}, got {e.shape}")
        if not np.all(np.isfinite(e)):
            raise ValueError("entries must be finite")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def multiindices(self):
        return enumerate_multiindices(self.n + 1, self.m)

    @property
    def Lambda(self) -> float:
        """Boundedness constant ``max |A_{alpha beta}|``."""
        return float(np.abs(self.entries).max())

    def adjoint(self) -> "CoefTensor":
        """The tensor of the formal adjoint, ``conj(A)^T``."""
        return CoefTensor(self.n, self.m, self.entries.conj().T)

    def combine(self, other: "CoefTensor", s: float) -> "CoefTensor":
        """Convex combination ``(1 - s) self + s other``."""
        if (self.n, self.m) != (other.n, other.m):
            raise ValueError("tensors of different shape")
        return CoefTensor(self.n, self.m, (1 - s) * self.entries + s * other.entries)

    def entry(self, alpha, beta) -> complex:
        return complex(self.entries[index_of(alpha), index_of(beta)])

    def to_json(self) -> dict:
        flat = self.entries.reshape(-1)
        return {
            "n": self.n,
            "m": self.m,
            "order": "lex",
            "entries": [[float(z.real), float(z.imag)] for z in flat],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CoefTensor":
        if obj.get("order", "lex") != "lex":
            raise ValueError("only the 'lex' multiindex order is supported")
        n, m = int(obj["n"]), int(obj["m"])
        k = count(n + 1, m)
        pairs = np.asarray(obj["entries"], dtype=float)
        if pairs.shape != (k * k, 2):
            raise ValueError(f"expected {k * k} complex pairs, got shape {pairs.shape}")
        return cls(n, m, (pairs[:, 0] + 1j * pairs[:, 1]).reshape(k, k))

    @cached_property
    def _vertical(self) -> np.ndarray:
        return np.array([alpha[-1] for alpha in self.multiindices])

    @cached_property
    def _horizontal(self) -> np.ndarray:
        return np.array([alpha[:-1] for alpha in self.multiindices], dtype=int)


@dataclass(frozen=True)
class EllipticityReport:
    """Sampled ellipticity constants of a coefficient tensor.

    Attributes
    ----------
    lambda_slice : float
        Slice-ellipticity constant: smallest generalized eigenvalue of the
        Hermitian part of ``C(xi)`` against ``diag(omega(xi))``.
    lambda_garding : float
        Gårding constant on gradient arrays ``(2 pi i (xi, tau))^alpha``.
    Lambda : float
        Boundedness constant.
    is_self_adjoint : bool
    sample_count : int
        Number of unit directions sampled.
    """

    lambda_slice: float
    lambda_garding: float
    Lambda: float
    is_self_adjoint: bool
    sample_count: int


def make_special_operator(n: int, m: int) -> CoefTensor:
    """Diagonal tensor with ``A_{alpha alpha} = |alpha_par|! / alpha_par!``.

    ``alpha_par`` is the horizontal part of ``alpha``.  The reduced symbol of
    this operator is diagonal with entries ``(2 pi |xi|)^{2(m-a)}``.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    diag = [multinomial(alpha[:-1]) for alpha in enumerate_multiindices(n + 1, m)]
    return CoefTensor(n, m, np.diag(np.asarray(diag, dtype=complex)))


def make_biharmonic_rho(n: int, rho: float) -> CoefTensor:
    """Biharmonic tensor with Poisson ratio ``rho``.

    Its form is ``rho <Lap psi, Lap phi> + (1 - rho) sum_{jk} <d_jk psi, d_jk phi>``.
    The mixed pair ``(j, k), (k, j)`` folds onto the single multiindex
    ``e_j + e_k``, which carries the diagonal entry ``2 (1 - rho)``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    d = n + 1
    k = count(d, 2)
    A = np.zeros((k, k), dtype=complex)

    def e(*idx):
        v = [0] * d
        for i in idx:
            v[i] += 1
        return index_of(v)

    for j in range(d):
        for l in range(d):
            A[e(j, j), e(l, l)] = 1.0 if j == l else rho
        for l in range(j + 1, d):
            A[e(j, l), e(j, l)] = 2.0 * (1.0 - rho)
    return CoefTensor(n, 2, A)


def check_self_adjoint(A: CoefTensor, tol: float = 0.0) -> bool:
    """True iff ``max |A_{ab} - conj(A_{ba})| <= tol``."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return bool(np.abs(A.entries - A.entries.conj().T).max() <= tol)


def reduced_matrices(A: CoefTensor, xi) -> tuple[np.ndarray, np.ndarray]:
    """Reduced form matrix ``C(xi)`` and slice weights ``omega(xi)``.

    Returns
    -------
    C : numpy.ndarray
        ``(m+1) x (m+1)`` matrix, ``C_ab = sum conj(z^{alpha_par}) A z^{beta_par}``
        over ``alpha = (alpha_par, a)``, ``beta = (beta_par, b)`` with
        ``z = 2 pi i xi``.
    omega : numpy.ndarray
        ``omega_a = sum_{|mu| = m - a} (2 pi xi)^{2 mu}``.
    """
    xi = np.asarray(xi, dtype=float).reshape(-1)
    if xi.size != A.n:
        raise ValueError(f"frequency must have {A.n} components")
    z = 2j * np.pi * xi
    mono = np.prod(z[None, :] ** A._horizontal, axis=1)
    Z = np.zeros((A.m + 1, A.size), dtype=complex)
    Z[A._vertical, np.arange(A.size)] = mono
    C = Z.conj() @ A.entries @ Z.T
    omega = (np.abs(Z) ** 2).sum(axis=1)
    return C, omega


def sphere_directions(n: int, samples: int) -> np.ndarray:
    """Deterministic unit directions in ``R^n`` including all coordinate axes.

    ``n = 1`` gives ``{+1, -1}``.  ``n = 2`` uses equally spaced angles.
    Higher dimensions map an unscrambled Halton sequence through the normal
    quantile function and normalize.
    """
    axes = np.vstack([np.eye(n), -np.eye(n)])
    if n == 1:
        return axes
    samples = max(int(samples), 1)
    if n == 2:
        th = 2 * np.pi * np.arange(samples) / samples
        pts = np.column_stack([np.cos(th), np.sin(th)])
    else:
        u = qmc.Halton(d=n, scramble=False).random(samples + 1)[1:]
        u = np.clip(u, 1e-12, 1 - 1e-12)
        pts = _normal.ppf(u)
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return np.vstack([axes, pts])


def _slice_min(A: CoefTensor, xi) -> float:
    C, omega = reduced_matrices(A, xi)
    H = 0.5 * (C + C.conj().T)
    return float(scipy.linalg.eigh(H, np.diag(omega), eigvals_only=True)[0])


def _garding_min(A: CoefTensor, direction, thetas) -> float:
    best = np.inf
    for th in thetas:
        C, omega = reduced_matrices(A, np.sin(th) * direction)
        v = (2j * np.pi * np.cos(th)) ** np.arange(A.m + 1)
        num = np.real(np.vdot(v, C @ v))
        den = float(np.sum(omega * np.abs(v) ** 2))
        best = min(best, num / den)
    return float(best)


def slice_ellipticity(A: CoefTensor, sphere_samples: int = 64) -> EllipticityReport:
    """Sampled slice-ellipticity and Gårding constants.

    Both forms are homogeneous of degree ``2m`` in the frequency, so it is
    enough to sample unit directions.

    Parameters
    ----------
    A : CoefTensor
    sphere_samples : int
        Number of non-axis directions on ``S^{n-1}``; the ``2n`` axis
        directions are always added.
    """
    if sphere_samples < 1:
        raise ValueError("sphere_samples must be at least 1")
    dirs = sphere_directions(A.n, sphere_samples)
    lam_slice = min(_slice_min(A, d) for d in dirs)
    thetas = np.linspace(0.0, np.pi, 33)
    lam_gard = min(_garding_min(A, d, thetas) for d in dirs)
    return EllipticityReport(
        lambda_slice=float(lam_slice),
        lambda_garding=float(lam_gard),
        Lambda=A.Lambda,
        is_self_adjoint=check_self_adjoint(A, 1e-12 * max(A.Lambda, 1.0)),
        sample_count=int(dirs.shape[0]),
    )
