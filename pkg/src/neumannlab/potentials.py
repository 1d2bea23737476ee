"""Per-frequency Newton kernel, layer potentials and the extension operator.

Fundamental solution
--------------------
``E`` solves ``P(d/dt) E = delta`` with ``P(d/dt) = sum (-1)^a C_ab d^{a+b}``,
the distributional form of ``int sum conj(psi^{(a)}) C_ab E^{(b)} dt = conj(psi(0))``.
By residues,

* ``E(t) = sum_{Re r < 0} Res_r e^{lam t}/p(lam)`` for ``t > 0``,
* ``E(t) = -sum_{Re r > 0} Res_r e^{lam t}/p(lam)`` for ``t < 0``.

For the Laplacian at ``2 pi |xi| = 1`` this is ``E = e^{-|t|}/2``; the sign is
fixed by ``P E = +delta``.

Layer potentials
----------------
* Single layer: ``S g = sum_l (-1)^l g_l E^{(l)}``, which is the Newton
  potential of the layer source whose pairing with ``psi`` is
  ``sum_l conj(psi^{(l)}(0)) g_l``.
* Double layer: ``D f = -1_+ F + sum_a (-1)^a E^{(a)} * h_a`` where ``F`` is the
  extension of ``f`` and ``h_a = 1_+ sum_b C_ab F^{(b)}``.  On each side this
  is an exact mode combination whose coefficients are moments
  ``int_0^inf s^i e^{-r s} h_a(s) ds``, integrated by adaptive quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial, pi

import numpy as np
from scipy.integrate import quad_vec

from .exppoly import ExpPoly
from .halfspace import conormal_matrix
from .multiindex import enumerate_multiindices
from .symbol import DEFAULT_ROOT_TOL, EllipticityError, ReducedSymbol, clustered_roots

__all__ = [
    "TwoSided",
    "OdeKernel",
    "QuadratureError",
    "newton_kernel",
    "neumann_array",
    "reduce_neumann_array",
    "single_layer",
    "extension_E",
    "double_layer",
    "double_layer_pointwise",
    "neumann_via_E",
]

#: Cutoff of the extension: ``(2 pi |xi| t)^{2m}`` at the end of the quadrature range.
_EXTENSION_EXPONENT_CUT = 50.0


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


@dataclass(frozen=True, eq=False)
class TwoSided:
    """A function given by one exponential polynomial on each half-line."""

    upper: ExpPoly
    lower: ExpPoly

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0, self.upper(np.maximum(t, 0)), self.lower(np.minimum(t, 0)))

    def derivative(self, k: int = 1) -> "TwoSided":
        return TwoSided(self.upper.derivative(k), self.lower.derivative(k))

    def __add__(self, other: "TwoSided") -> "TwoSided":
        return TwoSided(self.upper + other.upper, self.lower + other.lower)

    def __neg__(self) -> "TwoSided":
        return TwoSided(-self.upper, -self.lower)

    def __sub__(self, other: "TwoSided") -> "TwoSided":
        return self + (-other)

    def __mul__(self, scalar) -> "TwoSided":
        return TwoSided(self.upper * scalar, self.lower * scalar)

    __rmul__ = __mul__

    def side(self, halfspace: str) -> ExpPoly:
        return self.upper if halfspace == "upper" else self.lower

    def trace(self, halfspace: str, m: int) -> np.ndarray:
        """Dirichlet traces ``w^{(l)}(0^{+/-})``, ``l = 0..m-1``."""
        return self.side(halfspace).derivatives_at(0.0, m - 1)

    def neumann(self, sym: ReducedSymbol, halfspace: str) -> np.ndarray:
        """Conormal Neumann vector from the given side."""
        d = self.side(halfspace).derivatives_at(0.0, 2 * sym.m - 1)
        return conormal_matrix(sym, halfspace) @ d


@dataclass(frozen=True, eq=False)
class OdeKernel(TwoSided):
    """Fundamental solution of the reduced ODE at one frequency.

    Attributes
    ----------
    upper : ExpPoly
        ``E`` on ``t > 0`` (decaying roots).
    lower : ExpPoly
        ``E`` on ``t < 0`` (growing roots, decaying as ``t -> -inf``).
    lead : complex
        Leading coefficient of the characteristic polynomial.
    """

    lead: complex = 1.0


def _taylor_inverse(coeffs: np.ndarray, n: int) -> np.ndarray:
    """First ``n`` Taylor coefficients of ``1/q`` from those of ``q``."""
    a = np.zeros(n, dtype=complex)
    a[: min(n, coeffs.size)] = coeffs[:n]
    b = np.zeros(n, dtype=complex)
    b[0] = 1.0 / a[0]
    for k in range(1, n):
        b[k] = -np.dot(a[1 : k + 1], b[k - 1 :: -1][:k]) / a[0]
    return b


def newton_kernel(sym: ReducedSymbol, root_tol: float = DEFAULT_ROOT_TOL) -> OdeKernel:
    """Partial-fraction fundamental solution ``E`` with ``P(d/dt) E = delta``.

    Raises
    ------
    EllipticityError
        If a root lies on the imaginary axis.
    """
    roots = clustered_roots(sym, root_tol)
    tol = root_tol * sym.scale
    if any(abs(r.real) <= tol for r, _ in roots):
        raise EllipticityError(f"root on the imaginary axis at xi={sym.xi}")
    P = np.polynomial.polynomial
    up, lo = ExpPoly.zero(), ExpPoly.zero()
    for j, (r, mu) in enumerate(roots):
        q = np.array([sym.lead], dtype=complex)
        for k, (s, nu) in enumerate(roots):
            if k == j:
                continue
            for _ in range(nu):
                q = P.polymul(q, [r - s, 1.0])
        b = _taylor_inverse(q, mu)
        # residue of e^{lam t}/((lam - r)^mu q(lam)) = sum_j b_{mu-j} t^{j-1}/(j-1)! e^{rt}
        coef = [b[mu - j] / factorial(j - 1) for j in range(1, mu + 1)]
        term = ExpPoly(coef, list(range(mu)), [r] * mu)
        if r.real < 0:
            up = up + term
        else:
            lo = lo - term
    return OdeKernel(up, lo, lead=sym.lead)


def neumann_array(sym: ReducedSymbol, g, distribution: str = "smooth") -> np.ndarray:
    """Spread a Neumann vector over multiindices of order ``m - 1``.

    Component ``gamma = (mu, l)`` pairs with the trace ``d^gamma psi``, whose
    Fourier symbol is ``(2 pi i xi)^mu psi^{(l)}(0)``.

    Parameters
    ----------
    distribution : {"smooth", "axis"}
        ``"smooth"`` uses ``g_gamma = z^mu G_l / omega'_l`` with
        ``omega'_l = sum_{|mu| = m-1-l} |z^mu|^2``; ``"axis"`` puts all of
        ``G_l`` on ``mu = (m-1-l) e_1`` (needs ``xi_1 != 0``).

    Returns
    -------
    numpy.ndarray
        Values in canonical order of multiindices of order ``m - 1`` in
        ``n + 1`` variables.
    """
    m, n = sym.m, sym.n
    g = np.asarray(g, dtype=complex)
    z = 2j * pi * sym.xi
    gammas = enumerate_multiindices(n + 1, m - 1)
    mono = np.array([np.prod(z ** np.asarray(gm[:-1])) for gm in gammas])
    level = np.array([gm[-1] for gm in gammas])
    out = np.zeros(len(gammas), dtype=complex)
    if distribution == "smooth":
        for l in range(m):
            sel = level == l
            out[sel] = mono[sel] * g[l] / np.sum(np.abs(mono[sel]) ** 2)
    elif distribution == "axis":
        if sym.xi[0] == 0:
            raise ValueError("axis distribution needs xi_1 != 0")
        for l in range(m):
            target = (m - 1 - l,) + (0,) * (n - 1) + (l,)
            k = gammas.index(target)
            out[k] = g[l] / np.conj(mono[k])
    else:
        raise ValueError("distribution must be 'smooth' or 'axis'")
    return out


def reduce_neumann_array(sym: ReducedSymbol, arr) -> np.ndarray:
    """Neumann vector ``G_l = sum_{|mu| = m-1-l} conj(z^mu) g_{(mu, l)}``."""
    m, n = sym.m, sym.n
    z = 2j * pi * sym.xi
    G = np.zeros(m, dtype=complex)
    for gm, val in zip(enumerate_multiindices(n + 1, m - 1), np.asarray(arr, dtype=complex)):
        G[gm[-1]] += np.conj(np.prod(z ** np.asarray(gm[:-1]))) * val
    return G


def single_layer(sym: ReducedSymbol, kernel: OdeKernel, g, distribution: str = "smooth") -> TwoSided:
    """Single layer potential of a Neumann vector, in closed form on both sides.

    The vector is first spread over order-``(m-1)`` multiindices with
    :func:`neumann_array` and then paired back, so the result does not
    depend on ``distribution``.
    """
    G = reduce_neumann_array(sym, neumann_array(sym, g, distribution))
    out = TwoSided(ExpPoly.zero(), ExpPoly.zero())
    for l in range(sym.m):
        if G[l] != 0:
            out = out + kernel.derivative(l) * ((-1) ** l * G[l])
    return out


def _extension_derivatives(phi, c: float, t, upto: int) -> np.ndarray:
    """Derivatives ``0..upto`` of ``sum_k t^k/k! exp(-(c t)^{2m}) phi_k``."""
    phi = np.asarray(phi, dtype=complex)
    m = phi.size
    t = np.atleast_1d(np.asarray(t, dtype=float))
    kappa = c ** (2 * m)
    P = np.polynomial.polynomial
    polys = [np.array([1.0])]
    dexp = np.zeros(2 * m)
    dexp[-1] = -2 * m * kappa
    for _ in range(upto):
        polys.append(P.polyadd(P.polyder(polys[-1]), P.polymul(dexp, polys[-1])))
    g = np.exp(-kappa * t ** (2 * m))
    gder = np.array([P.polyval(t, pj) * g for pj in polys])
    out = np.zeros((upto + 1, t.size), dtype=complex)
    for d in range(upto + 1):
        for k in range(m):
            if phi[k] == 0:
                continue
            for i in range(0, min(d, k) + 1):
                mono = t ** (k - i) / factorial(k - i)
                out[d] += phi[k] * comb(d, i) * mono * gder[d - i]
    return out


def extension_E(phi, xi, t) -> np.ndarray:
    """Extension ``E phi(xi, t) = sum_k t^k/k! exp(-(4 pi^2 t^2 |xi|^2)^m) phi_k``.

    Parameters
    ----------
    phi : array_like
        Trace vector of length ``m``.
    xi : array_like
        Frequency.
    t : float or array_like
        Heights.

    Returns
    -------
    numpy.ndarray
        ``(m + 1, len(t))`` array of the value and ``t``-derivatives up to
        order ``m``.
    """
    c = 2 * pi * np.linalg.norm(np.asarray(xi, dtype=float))
    phi = np.asarray(phi, dtype=complex)
    return _extension_derivatives(phi, c, t, phi.size)


def _cutoff(sym: ReducedSymbol) -> float:
    return _EXTENSION_EXPONENT_CUT ** (1.0 / (2 * sym.m)) / sym.scale


def _source(sym: ReducedSymbol, f, s) -> np.ndarray:
    """``h_a(s) = sum_b C_ab F^{(b)}(s)`` as an ``(m+1, len(s))`` array."""
    F = _extension_derivatives(f, sym.scale, s, sym.m)
    return sym.C @ F


def _kernel_terms(kernel: OdeKernel, m: int):
    """Flattened terms of ``E^{(a)}`` on both sides, ``a = 0..m``."""
    out = []
    for a in range(m + 1):
        ka = kernel.derivative(a)
        for side in ("upper", "lower"):
            ep = ka.side(side)
            for c, q, r in zip(ep.coef, ep.power, ep.rate):
                out.append((a, side, complex(c), int(q), complex(r)))
    return out


def double_layer(sym: ReducedSymbol, kernel: OdeKernel, f, quad_tol: float = 1e-9,
                 return_error: bool = False):
    """Double layer potential of a trace vector.

    The upper side uses ``int_0^inf E_+^{(a)}(t - s) h_a(s) ds`` (the ``-F``
    term cancels the remaining part exactly), and the lower side uses
    ``int_0^inf E_-^{(a)}(t - s) h_a(s) ds``.  Expanding
    ``(t - s)^q e^{r (t - s)}`` binomially reduces both to moments
    ``int_0^inf s^i e^{-r s} h_a(s) ds``.

    Raises
    ------
    QuadratureError
        If the moments do not converge to ``quad_tol``.
    """
    m = sym.m
    f = np.asarray(f, dtype=complex)
    terms = _kernel_terms(kernel, m)
    moment_keys = sorted(
        {(a, i, r) for a, _, _, q, r in terms for i in range(q + 1)},
        key=lambda k: (k[0], k[1], k[2].real, k[2].imag),
    )
    idx = {k: j for j, k in enumerate(moment_keys)}
    a_arr = np.array([k[0] for k in moment_keys])
    i_arr = np.array([k[1] for k in moment_keys])
    r_arr = np.array([k[2] for k in moment_keys])

    def integrand(s):
        h = _source(sym, f, s)[:, 0]
        return s**i_arr * np.exp(-r_arr * s) * h[a_arr]

    T = _cutoff(sym)
    val, err = quad_vec(integrand, 0.0, T, epsabs=0.0, epsrel=quad_tol, norm="max", limit=2000)
    scale = np.abs(val).max() if val.size else 0.0
    if not np.isfinite(err) or err > max(quad_tol * scale, 1e-300) * 10:
        raise QuadratureError(f"double-layer moments reached error {err:.3g} (scale {scale:.3g})")
    sides = {"upper": ExpPoly.zero(), "lower": ExpPoly.zero()}
    for a, side, c, q, r in terms:
        sgn = (-1) ** a
        for i in range(q + 1):
            mom = val[idx[(a, i, r)]]
            coef = sgn * c * comb(q, i) * (-1) ** i * mom
            sides[side] = sides[side] + ExpPoly.term(r, q - i, coef)
    out = TwoSided(sides["upper"], sides["lower"])
    return (out, float(err)) if return_error else out


def double_layer_pointwise(sym: ReducedSymbol, kernel: OdeKernel, f, t: float, upto: int = 0,
                           quad_tol: float = 1e-11) -> np.ndarray:
    """Direct evaluation of ``D f`` and derivatives at one height.

    Computes ``-1_+ F^{(j)}(t) + sum_a (-1)^a int_0^inf E^{(a+j)}(t - s) h_a(s) ds``
    by splitting the ``s`` range at ``t``.  Serves as an independent check of
    :func:`double_layer`.  ``upto`` is limited to ``m - 1`` so that no kernel
    derivative of order ``2m`` (which carries a delta) enters.
    """
    m = sym.m
    if upto > m - 1:
        raise ValueError("upto must not exceed m - 1")
    f = np.asarray(f, dtype=complex)
    ders = [[kernel.derivative(a + j) for a in range(m + 1)] for j in range(upto + 1)]

    def integrand(s):
        h = _source(sym, f, s)[:, 0]
        return np.array([sum((-1) ** a * ders[j][a](t - s) * h[a] for a in range(m + 1)) for j in range(upto + 1)])

    T = _cutoff(sym)
    pts = [p for p in (t,) if 0 < p < T]
    total = np.zeros(upto + 1, dtype=complex)
    bounds = [0.0] + pts + [T]
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        v, _ = quad_vec(integrand, lo, hi, epsabs=0.0, epsrel=quad_tol, limit=4000)
        total += v
    if t > 0:
        total -= _extension_derivatives(f, sym.scale, [t], upto)[:, 0]
    return total


def neumann_via_E(sym: ReducedSymbol, solution: ExpPoly, phi, halfspace: str = "upper",
                  quad_tol: float = 1e-10) -> complex:
    """Neumann pairing through the extension operator.

    Evaluates ``int_eps^T sum_{a,b} conj(Psi^{(a)}) C_ab w^{(b)} dt`` with
    ``Psi`` the extension of ``phi``, ``eps = 1e-8/|xi|`` and ``T`` past the
    extension's super-exponential cutoff.  For a decaying mode solution ``w``
    this equals ``sum_l conj(phi_l) G_l`` with ``G`` from the conormal map.

    Raises
    ------
    QuadratureError
        If the integral does not converge.
    """
    phi = np.asarray(phi, dtype=complex)
    m = sym.m
    if phi.size != m:
        raise ValueError(f"trace vector must have length {m}")
    if not np.any(phi):
        return 0j
    ders = [solution.derivative(b) for b in range(m + 1)]
    sign = 1.0 if halfspace == "upper" else -1.0
    xi_norm = float(np.linalg.norm(sym.xi))

    def integrand(u):
        t = sign * u
        Psi = _extension_derivatives(phi, sym.scale, [t], m)[:, 0]
        W = np.array([d(t) for d in ders])
        return np.vdot(Psi, sym.C @ W)

    eps = 1e-8 / xi_norm
    T = _cutoff(sym)
    val, err = quad_vec(integrand, eps, T, epsabs=0.0, epsrel=quad_tol, limit=2000)
    if not np.isfinite(val) or err > 10 * quad_tol * max(abs(val), 1e-300) + 1e-14 * abs(val):
        raise QuadratureError(f"Neumann pairing reached error {err:.3g}")
    return complex(val)
