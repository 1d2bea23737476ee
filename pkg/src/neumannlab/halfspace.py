"""Boundary symbol maps, the per-frequency Neumann and Dirichlet solvers, and synthesis.

Conventions
-----------
A mode solution on the upper half-line is ``w(t) = sum_k f_k t^{r_k} e^{lam_k t}``.

* Dirichlet traces: ``phi_l = w^{(l)}(0)``, ``l = 0..m-1``.
* Neumann data: ``G_l`` is the coefficient of ``conj(psi^{(l)}(0))`` in
  ``int_0^inf sum_{a,b} conj(psi^{(a)}) C_ab w^{(b)} dt``.  Integrating by
  parts gives the conormal formula
  ``G_l = -sum_{a > l} sum_b (-1)^{a-1-l} C_ab w^{(a+b-1-l)}(0)``.
  On the lower half-line the sign flips.  For the Laplacian this pins
  ``G_0 = -w'(0)`` on the upper side.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from math import factorial, gamma, pi

import numpy as np
import scipy.linalg

from .multiindex import enumerate_multiindices
from .operators import CoefTensor, check_self_adjoint, slice_ellipticity, sphere_directions
from .symbol import (
    DEFAULT_ROOT_TOL,
    EllipticityError,
    ModeBasis,
    ReducedSymbol,
    mode_basis,
    reduce,
)

__all__ = [
    "FrequencyField",
    "ModeCoeffs",
    "ModeField",
    "frequency_grid",
    "conormal_matrix",
    "dirichlet_map",
    "neumann_map",
    "special_neumann_matrix",
    "sine_matrix",
    "dtn_map",
    "solve_neumann",
    "solve_dirichlet",
    "synthesize",
    "OK",
    "ILL_POSED",
]

OK = "OK"
ILL_POSED = "ILL_POSED"


@dataclass(frozen=True, eq=False)
class FrequencyField:
    """Per-frequency vectors with quadrature weights.

    Attributes
    ----------
    xi : numpy.ndarray
        ``(N, n)`` nonzero frequencies.
    weights : numpy.ndarray
        ``(N,)`` positive quadrature weights for ``int d xi``.
    values : numpy.ndarray
        ``(N, k)`` complex payload (Neumann vectors, trace vectors, ...).
    kind : str
        Payload label: ``"neumann"``, ``"trace"`` or ``"modes"``.
    """

    xi: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    kind: str = "neumann"

    def __post_init__(self):
        xi = np.atleast_2d(np.asarray(self.xi, dtype=float))
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        v = np.asarray(self.values, dtype=complex)
        if v.ndim == 1:
            v = v[:, None]
        if not (xi.shape[0] == w.size == v.shape[0]):
            raise ValueError("xi, weights and values must have the same number of samples")
        if np.any(np.linalg.norm(xi, axis=1) == 0):
            raise ValueError("zero frequency is excluded")
        if np.any(~(w > 0)):
            raise ValueError("weights must be positive")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.weights.size

    @property
    def n(self) -> int:
        return self.xi.shape[1]

    def with_values(self, values, kind: str) -> "FrequencyField":
        return FrequencyField(self.xi, self.weights, values, kind)


@dataclass(frozen=True, eq=False)
class ModeCoeffs:
    """Coefficients ``f`` of one frequency's solution over its mode basis."""

    sym: ReducedSymbol
    basis: ModeBasis
    f: np.ndarray
    status: str = OK

    @property
    def profile(self):
        """The solution ``w(t)`` as an :class:`~neumannlab.exppoly.ExpPoly`."""
        return self.basis.combination(self.f)


@dataclass(frozen=True, eq=False)
class ModeField(FrequencyField):
    """Solution field: mode coefficients per frequency plus diagnostics."""

    modes: tuple = field(default=())
    status: tuple = field(default=())
    cond: np.ndarray = field(default_factory=lambda: np.zeros(0))
    halfspace: str = "upper"

    @property
    def ok(self) -> np.ndarray:
        return np.array([s == OK for s in self.status], dtype=bool)

    @property
    def all_ok(self) -> bool:
        return bool(self.ok.all())


def frequency_grid(n: int, xi_min: float = 1e-3, xi_max: float = 10.0, radial: int = 32,
                   angular: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Logarithmic-radial by angular quadrature grid on ``xi_min <= |xi| <= xi_max``.

    Radial nodes are geometric midpoints of ``radial`` log-spaced cells and
    carry weight ``r^n * d(log r)``.  For ``n = 1`` the two directions are
    ``+1`` and ``-1``; for ``n = 2`` angles are offset by half a cell so no
    node lies on a coordinate axis.

    Returns
    -------
    xi : numpy.ndarray
        ``(radial * n_dirs, n)`` nodes.
    weights : numpy.ndarray
        Matching positive weights.
    """
    if not (0 < xi_min < xi_max):
        raise ValueError("need 0 < xi_min < xi_max")
    if radial < 1 or angular < 1:
        raise ValueError("radial and angular counts must be positive")
    edges = np.geomspace(xi_min, xi_max, radial + 1)
    r = np.sqrt(edges[:-1] * edges[1:])
    wr = r**n * np.diff(np.log(edges))
    if n == 1:
        dirs = np.array([[1.0], [-1.0]])
        wa = np.ones(2)
    elif n == 2:
        th = 2 * pi * (np.arange(angular) + 0.5) / angular
        dirs = np.column_stack([np.cos(th), np.sin(th)])
        wa = np.full(angular, 2 * pi / angular)
    else:
        dirs = sphere_directions(n, angular)[2 * n:]
        area = 2 * pi ** (n / 2) / gamma(n / 2)
        wa = np.full(dirs.shape[0], area / dirs.shape[0])
    xi = (r[:, None, None] * dirs[None, :, :]).reshape(-1, n)
    w = (wr[:, None] * wa[None, :]).reshape(-1)
    return xi, w


def conormal_matrix(sym: ReducedSymbol, halfspace: str = "upper") -> np.ndarray:
    """Matrix ``B`` (``m x 2m``) with ``G = B @ (w(0), w'(0), ..., w^{(2m-1)}(0))``."""
    m, C = sym.m, sym.C
    B = np.zeros((m, 2 * m), dtype=complex)
    for l in range(m):
        for a in range(l + 1, m + 1):
            for b in range(m + 1):
                B[l, a + b - 1 - l] -= (-1) ** (a - 1 - l) * C[a, b]
    return B if halfspace == "upper" else -B


def _derivative_matrix(basis: ModeBasis, upto: int) -> np.ndarray:
    """Entry ``(j, k)``: ``j``-th derivative at 0 of the ``k``-th basis function."""
    terms = basis.terms
    out = np.zeros((upto + 1, len(terms)), dtype=complex)
    for k, (lam, r) in enumerate(terms):
        for j in range(r, upto + 1):
            out[j, k] = factorial(j) / factorial(j - r) * lam ** (j - r)
    return out


def dirichlet_map(basis: ModeBasis) -> np.ndarray:
    """Confluent Vandermonde matrix of the basis (``m x m``)."""
    return _derivative_matrix(basis, basis.dim - 1)


def neumann_map(sym: ReducedSymbol, basis: ModeBasis) -> np.ndarray:
    """Matrix ``N`` with ``N f = G`` for mode coefficients ``f``."""
    return conormal_matrix(sym, basis.halfspace) @ _derivative_matrix(basis, 2 * sym.m - 1)


def special_neumann_matrix(xi, m: int) -> np.ndarray:
    """Closed-form Neumann matrix of the special operator over its exact roots.

    ``N_{lk} = -2 i^l (2 pi |xi|)^{2m-1-l} sin(pi (1+l) k/(m+1)) / (e^{2 pi i k/(m+1)} - 1)``
    with ``l = 0..m-1`` and ``k = 1..m``.
    """
    c = 2 * pi * np.linalg.norm(np.asarray(xi, dtype=float))
    if c == 0:
        raise ValueError("zero frequency is excluded")
    l = np.arange(m)[:, None]
    k = np.arange(1, m + 1)[None, :]
    return (
        -2 * (1j**l) * c ** (2 * m - 1 - l)
        * np.sin(pi * (1 + l) * k / (m + 1))
        / (np.exp(2j * pi * k / (m + 1)) - 1)
    )


def sine_matrix(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Sine matrix ``M_{Lk} = sin(pi L k/(m+1))`` and its inverse ``2 M/(m+1)``."""
    if m < 1:
        raise ValueError("m must be positive")
    L = np.arange(1, m + 1)
    M = np.sin(pi * np.outer(L, L) / (m + 1))
    return M, 2.0 / (m + 1) * M


def dtn_map(sym: ReducedSymbol, halfspace: str = "upper") -> np.ndarray:
    """Dirichlet-to-Neumann matrix ``N D^{-1}`` computed without a mode basis.

    The decaying subspace of the first-order companion system is taken from
    an ordered complex Schur form, which stays well conditioned through
    confluent roots.
    """
    m = sym.m
    p = sym.charpoly
    K = np.zeros((2 * m, 2 * m), dtype=complex)
    K[np.arange(2 * m - 1), np.arange(1, 2 * m)] = 1.0
    K[-1, :] = -p[:-1] / p[-1]
    _, Z, sdim = scipy.linalg.schur(K, output="complex", sort="lhp" if halfspace == "upper" else "rhp")
    if sdim != m:
        raise EllipticityError(f"{sdim} decaying directions, expected {m} at xi={sym.xi}")
    Y = Z[:, :m]
    G = conormal_matrix(sym, halfspace) @ Y
    return np.linalg.solve(Y[:m].T, G.T).T


def _equilibrated_cond(M: np.ndarray) -> float:
    r = np.abs(M).max(axis=1)
    if np.any(r == 0):
        return np.inf
    Ms = M / r[:, None]
    c = np.abs(Ms).max(axis=0)
    if np.any(c == 0):
        return np.inf
    return float(np.linalg.cond(Ms / c[None, :]))


def _check_operator(A: CoefTensor) -> None:
    if not check_self_adjoint(A, 1e-12 * max(A.Lambda, 1.0)):
        warnings.warn("coefficient tensor is not self-adjoint", RuntimeWarning, stacklevel=3)
        return
    if slice_ellipticity(A, 16).lambda_slice <= 0:
        warnings.warn("coefficient tensor is not slice-elliptic", RuntimeWarning, stacklevel=3)


def _solve(A, data, halfspace, kind, rtol, cond_max, root_tol):
    if data.values.shape[1] != A.m:
        raise ValueError(f"payload has {data.values.shape[1]} components, expected m={A.m}")
    if data.n != A.n:
        raise ValueError(f"frequencies have {data.n} components, expected n={A.n}")
    _check_operator(A)
    modes, status, conds = [], [], []
    F = np.full((len(data), A.m), np.nan + 0j)
    for i, (xi, g) in enumerate(zip(data.xi, data.values)):
        sym = reduce(A, xi)
        try:
            basis = mode_basis(sym, halfspace, root_tol)
        except EllipticityError:
            modes.append(None)
            status.append(ILL_POSED)
            conds.append(np.inf)
            continue
        M = neumann_map(sym, basis) if kind == "neumann" else dirichlet_map(basis)
        cond = _equilibrated_cond(M)
        conds.append(cond)
        st = ILL_POSED
        f = np.full(A.m, np.nan + 0j)
        if np.isfinite(cond) and cond <= cond_max:
            f = scipy.linalg.solve(M, g)
            if np.linalg.norm(M @ f - g) <= rtol * np.linalg.norm(g) or not np.any(g):
                st = OK
                F[i] = f
        modes.append(ModeCoeffs(sym, basis, f, st))
        status.append(st)
    return ModeField(
        data.xi, data.weights, F, "modes",
        modes=tuple(modes), status=tuple(status), cond=np.asarray(conds), halfspace=halfspace,
    )


def solve_neumann(A: CoefTensor, data: FrequencyField, halfspace: str = "upper", rtol: float = 1e-9,
                  cond_max: float = 1e12, root_tol: float = DEFAULT_ROOT_TOL) -> ModeField:
    """Solve the Neumann problem frequency by frequency.

    Parameters
    ----------
    A : CoefTensor
    data : FrequencyField
        Neumann vectors ``G(xi)``.
    halfspace : {"upper", "lower"}
    rtol : float
        Required relative residual ``|N f - G| <= rtol |G|``.
    cond_max : float
        Largest accepted condition number of the row/column equilibrated ``N``.
    root_tol : float
        Root clustering tolerance, see :func:`neumannlab.symbol.mode_basis`.

    Returns
    -------
    ModeField
        Coefficients per frequency.  Frequencies whose symbol is singular,
        ill conditioned or not elliptic carry status ``"ILL_POSED"`` and NaN
        coefficients.
    """
    return _solve(A, data, halfspace, "neumann", rtol, cond_max, root_tol)


def solve_dirichlet(A: CoefTensor, data: FrequencyField, halfspace: str = "upper", rtol: float = 1e-9,
                    cond_max: float = 1e12, root_tol: float = DEFAULT_ROOT_TOL) -> ModeField:
    """Solve the Dirichlet problem frequency by frequency (see :func:`solve_neumann`)."""
    return _solve(A, data, halfspace, "dirichlet", rtol, cond_max, root_tol)


def synthesize(field: ModeField, x, t, order: int = 0) -> np.ndarray:
    """Inverse Fourier synthesis of ``grad^order w`` on a grid.

    ``w(x, t) = sum_s weight_s w_s(t) exp(2 pi i xi_s . x)``, and the component
    for ``gamma = (gamma_par, g)`` multiplies each term by
    ``(2 pi i xi)^{gamma_par}`` and differentiates ``g`` times in ``t``.

    Parameters
    ----------
    field : ModeField
    x : array_like
        ``(P, n)`` horizontal points.
    t : array_like
        ``(T,)`` vertical coordinates on the solution's side.
    order : int
        Derivative order ``j <= m``.

    Returns
    -------
    numpy.ndarray
        Complex array ``(K, P, T)``; components follow the canonical order of
        multiindices of order ``j`` in ``n + 1`` variables.  Ill-posed
        frequencies are skipped.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    n = field.n
    if x.shape[1] != n:
        raise ValueError(f"x must have {n} columns")
    m = field.values.shape[1]
    if order > m:
        raise ValueError("derivative order must not exceed m")
    gammas = enumerate_multiindices(n + 1, order)
    out = np.zeros((len(gammas), x.shape[0], t.size), dtype=complex)
    for mc, xi, wt in zip(field.modes, field.xi, field.weights):
        if mc is None or mc.status != OK:
            continue
        phase = wt * np.exp(2j * pi * (x @ xi))
        prof = mc.profile
        ders = [prof(t)]
        for _ in range(order):
            prof = prof.derivative()
            ders.append(prof(t))
        z = 2j * pi * xi
        for k, gam in enumerate(gammas):
            coef = np.prod(z ** np.asarray(gam[:-1]))
            out[k] += coef * phase[:, None] * ders[gam[-1]][None, :]
    return out
