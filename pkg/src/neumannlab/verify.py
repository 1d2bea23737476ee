"""Verification suite: Rellich inequality, well-posedness sweeps, continuation,
jump relations, Green's formula and adjoint identities, all per frequency.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from math import pi
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .halfspace import OK, ModeField, conormal_matrix, dirichlet_map, dtn_map, neumann_map
from .norms import boundary_fields, data_norms, solution_norms
from .operators import (
    CoefTensor,
    _slice_min,
    check_self_adjoint,
    make_special_operator,
    slice_ellipticity,
    sphere_directions,
)
from .potentials import double_layer, newton_kernel, single_layer
from .symbol import DEFAULT_ROOT_TOL, EllipticityError, mode_basis, reduce

__all__ = [
    "RellichReport",
    "SweepReport",
    "ContinuationReport",
    "rellich_per_frequency",
    "rellich_check",
    "uniqueness_estimate",
    "wellposedness_sweep",
    "continuation_certificate",
    "duality_check",
    "jump_check",
    "green_check",
    "random_tensor",
    "random_self_adjoint_tensor",
]


@dataclass(frozen=True)
class RellichReport:
    """Integrated Rellich inequality ``lhs <= rhs``.

    ``lhs = ||Tr_m w||^2`` and ``rhs = -(2/lambda) Re <Tr_{m-1} d_t w, M^+ w>``.
    """

    lhs: float
    rhs: float
    lambda_used: float
    margin: float

    def to_json(self) -> dict:
        return {k: float(v) for k, v in asdict(self).items()}


@dataclass
class SweepReport:
    """Normalized smallest singular value of ``N`` along a parameter family."""

    params: np.ndarray
    sigma_ratio: np.ndarray
    lambda_slice: np.ndarray
    zeros: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "params": [float(p) for p in self.params],
            "sigma_min_normalized": [float(s) for s in self.sigma_ratio],
            "lambda_slice": [float(s) for s in self.lambda_slice],
            "zeros": [float(z) for z in self.zeros],
        }

    def rows(self):
        """CSV rows ``(rho, sigma_min_normalized, lambda_slice)``."""
        return list(zip(self.params, self.sigma_ratio, self.lambda_slice))


@dataclass
class ContinuationReport:
    """Outcome of the perturbation walk from ``A0`` to ``A1``."""

    success: bool
    schedule: list
    failure_point: float | None
    max_contraction: float

    def to_json(self) -> dict:
        return {
            "success": bool(self.success),
            "schedule": [float(s) for s in self.schedule],
            "failure_point": None if self.failure_point is None else float(self.failure_point),
            "max_contraction": float(self.max_contraction),
        }


# ----------------------------------------------------------------------
# Rellich and uniqueness
# ----------------------------------------------------------------------


def rellich_per_frequency(sym, w) -> tuple[float, float]:
    """Per-frequency Rellich quantities before division by ``lambda``.

    Returns
    -------
    lhs : float
        ``sum_a omega_a |w^{(a)}(0)|^2``.
    pairing : float
        ``-2 Re sum_l conj(w^{(l+1)}(0)) G_l``; the right side is ``pairing/lambda``.
    """
    d = w.derivatives_at(0.0, 2 * sym.m - 1)
    G = conormal_matrix(sym, "upper") @ d
    lhs = float(np.sum(sym.omega * np.abs(d[: sym.m + 1]) ** 2))
    pairing = float(-2.0 * np.real(np.vdot(d[1 : sym.m + 1], G)))
    return lhs, pairing


def _field_lambda(A: CoefTensor, xi: np.ndarray, sphere_samples: int) -> float:
    lam = slice_ellipticity(A, sphere_samples).lambda_slice
    for x in xi:
        lam = min(lam, _slice_min(A, x))
    return float(lam)


def rellich_check(A: CoefTensor, field: ModeField, lam: float | None = None, sphere_samples: int = 64) -> RellichReport:
    """Integrated Rellich inequality for a solution field.

    ``lam`` defaults to the sampled slice constant, also minimized over the
    field's own frequency directions so the per-frequency bound is never
    evaluated with a constant larger than the true one there.
    """
    if lam is None:
        lam = _field_lambda(A, field.xi, sphere_samples)
    lhs = pairing = 0.0
    for mc, wt, st in zip(field.modes, field.weights, field.status):
        if st != OK:
            continue
        l, p = rellich_per_frequency(mc.sym, mc.profile)
        lhs += wt * l
        pairing += wt * p
    rhs = pairing / lam
    return RellichReport(float(lhs), float(rhs), float(lam), float(rhs - lhs))


def uniqueness_estimate(A: CoefTensor, field: ModeField, t_grid=None) -> float:
    """Ratio ``(sup_L2 + square_function) / neumann_L2_weighted``."""
    sol = solution_norms(field, t_grid)
    _, neumann = boundary_fields(field)
    den = data_norms(neumann, A.m)["neumann_L2_weighted"]
    return float((sol["sup_L2"] + sol["square_function"]) / den)


# ----------------------------------------------------------------------
# Sweeps and continuation
# ----------------------------------------------------------------------


def _unit_samples(n: int, xi_samples) -> np.ndarray:
    """Frequencies rescaled to ``2 pi |xi| = 1``."""
    if xi_samples is None:
        xi_samples = sphere_directions(n, 8)
    xi = np.atleast_2d(np.asarray(xi_samples, dtype=float))
    return xi / (2 * pi * np.linalg.norm(xi, axis=1, keepdims=True))


def _sigma_ratio(A: CoefTensor, unit_xi: np.ndarray, root_tol: float) -> float:
    worst = np.inf
    for xi in unit_xi:
        sym = reduce(A, xi)
        try:
            basis = mode_basis(sym, "upper", root_tol)
        except EllipticityError:
            return 0.0
        s = np.linalg.svd(neumann_map(sym, basis), compute_uv=False)
        worst = min(worst, s[-1] / s[0] if s[0] > 0 else 0.0)
    return float(worst)


def wellposedness_sweep(family: Callable[[float], CoefTensor], params, xi_samples=None,
                        zero_tol: float = 1e-8, root_tol: float = DEFAULT_ROOT_TOL,
                        sphere_samples: int = 16, xatol: float = 1e-10) -> SweepReport:
    """Scan ``min_xi sigma_min(N)/sigma_max(N)`` along a one-parameter family.

    Frequencies are rescaled to ``2 pi |xi| = 1`` (the ratio is homogeneous
    of degree zero).  Every local minimum of the sampled curve is refined by
    bounded Brent minimization between its grid neighbours, and kept as a
    zero when the refined ratio is below ``zero_tol``.
    """
    params = np.asarray(params, dtype=float).reshape(-1)
    if params.size == 0:
        raise ValueError("empty parameter range")
    A0 = family(float(params[0]))
    unit = _unit_samples(A0.n, xi_samples)

    def ratio(p):
        return _sigma_ratio(family(float(p)), unit, root_tol)

    r = np.array([ratio(p) for p in params])
    lam = np.array([slice_ellipticity(family(float(p)), sphere_samples).lambda_slice for p in params])
    zeros = []
    k_all = range(params.size)
    for k in k_all:
        left = r[k - 1] if k > 0 else np.inf
        right = r[k + 1] if k + 1 < params.size else np.inf
        if not (r[k] <= left and r[k] <= right):
            continue
        if params.size == 1:
            cand, val = params[0], r[0]
        else:
            lo = params[max(k - 1, 0)]
            hi = params[min(k + 1, params.size - 1)]
            res = minimize_scalar(ratio, bounds=(lo, hi), method="bounded", options={"xatol": xatol})
            cand, val = (res.x, res.fun) if res.fun <= r[k] else (params[k], r[k])
        if val < zero_tol and all(abs(cand - z) > 1e-6 for z in zeros):
            zeros.append(float(cand))
    return SweepReport(params, r, lam, sorted(zeros))


def _dtn_samples(A: CoefTensor, unit_xi, halfspace) -> list:
    return [dtn_map(reduce(A, xi), halfspace) for xi in unit_xi]


def continuation_certificate(A0: CoefTensor, A1: CoefTensor, xi_samples=None, max_step: float = 0.25,
                             min_step: float = 1e-4, halfspace: str = "upper",
                             cond_max: float = 1e12) -> ContinuationReport:
    """Certify invertibility along ``A_s = (1 - s) A0 + s A1``, ``s in [0, 1]``.

    A step ``r -> s`` is admissible when, at every sampled frequency,
    ``||L_s - L_r|| * ||L_r^{-1}|| <= 1/2`` for the Dirichlet-to-Neumann
    matrices ``L``, so ``L_s`` is invertible by a Neumann series.  Steps
    start at ``max_step``, halve on rejection and double (up to
    ``max_step``) after acceptance.  The walk fails at ``r`` when no step of
    length at least ``min_step`` is admissible.
    """
    unit = _unit_samples(A0.n, xi_samples)

    def inverses(mats):
        out = []
        for M in mats:
            if np.linalg.cond(M) > cond_max:
                return None
            out.append(np.linalg.inv(M))
        return out

    try:
        L_r = _dtn_samples(A0, unit, halfspace)
    except EllipticityError:
        return ContinuationReport(False, [0.0], 0.0, np.inf)
    inv_r = inverses(L_r)
    if inv_r is None:
        return ContinuationReport(False, [0.0], 0.0, np.inf)
    r, h = 0.0, max_step
    schedule, worst = [0.0], 0.0
    while r < 1.0:
        s = min(1.0, r + h)
        try:
            L_s = _dtn_samples(A0.combine(A1, s), unit, halfspace)
            q = max(np.linalg.norm(Ls - Lr, 2) * np.linalg.norm(Ir, 2) for Ls, Lr, Ir in zip(L_s, L_r, inv_r))
        except EllipticityError:
            q = np.inf
        inv_s = inverses(L_s) if q <= 0.5 else None
        if inv_s is not None:
            r, L_r, inv_r = s, L_s, inv_s
            schedule.append(float(s))
            worst = max(worst, float(q))
            h = min(max_step, 2 * h)
            continue
        h /= 2
        if h < min_step:
            return ContinuationReport(False, schedule, float(r), worst)
    return ContinuationReport(True, schedule, None, worst)


# ----------------------------------------------------------------------
# Layer potential identities
# ----------------------------------------------------------------------


def _rel(a, b) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    scale = max(np.abs(a).max(initial=0.0), np.abs(b).max(initial=0.0), 1e-300)
    return float(np.abs(a - b).max() / scale)


def jump_check(A: CoefTensor, xi, g, f, quad_tol: float = 1e-9, root_tol: float = DEFAULT_ROOT_TOL) -> dict:
    """Deviations in the four jump relations at one frequency.

    Returns
    -------
    dict
        ``S_trace``: ``|Tr^+ S g - Tr^- S g|``; ``S_neumann``:
        ``|M^+ S g + M^- S g - g|``; ``D_trace``: ``|Tr^+ D f - Tr^- D f + f|``;
        ``D_neumann``: ``|M^+ D f + M^- D f|``.  Trace deviations are scaled
        by ``2 pi |xi|`` powers so that all entries are comparable.
    """
    sym = reduce(A, xi)
    E = newton_kernel(sym, root_tol)
    m, c = sym.m, sym.scale
    g = np.asarray(g, dtype=complex)
    f = np.asarray(f, dtype=complex)
    S = single_layer(sym, E, g)
    D = double_layer(sym, E, f, quad_tol)
    tr_scale = c ** -np.arange(m)
    ne_scale = c ** -(2 * m - 1 - np.arange(m))
    gs = np.abs(g * ne_scale).max()
    fs = np.abs(f * tr_scale).max()
    return {
        "S_trace": float(np.abs((S.trace("upper", m) - S.trace("lower", m)) * tr_scale).max() / gs),
        "S_neumann": float(np.abs((S.neumann(sym, "upper") + S.neumann(sym, "lower") - g) * ne_scale).max() / gs),
        "D_trace": float(np.abs((D.trace("upper", m) - D.trace("lower", m) + f) * tr_scale).max() / fs),
        "D_neumann": float(np.abs((D.neumann(sym, "upper") + D.neumann(sym, "lower")) * ne_scale).max() / fs),
    }


def green_check(A: CoefTensor, xi, f, t_values=None, quad_tol: float = 1e-9,
                root_tol: float = DEFAULT_ROOT_TOL) -> dict:
    """Green's formula ``1_+ u = -D(Tr^+ u) + S(M^+ u)`` for a decaying mode ``u``.

    Parameters
    ----------
    f : array_like
        Mode coefficients of ``u`` over the upper basis.
    t_values : array_like, optional
        Positive heights in units of ``1/(2 pi |xi|)``; defaults to
        ``(0.05, 0.2, 0.5, 1, 2)``.  Their negatives are used below.

    Returns
    -------
    dict
        ``upper``: worst relative error over derivatives ``0..m`` at the
        positive heights; ``lower``: worst relative size of the
        reconstruction at the negative heights.
    """
    sym = reduce(A, xi)
    basis = mode_basis(sym, "upper", root_tol)
    u = basis.combination(f)
    E = newton_kernel(sym, root_tol)
    m, c = sym.m, sym.scale
    phi = dirichlet_map(basis) @ np.asarray(f, dtype=complex)
    G = neumann_map(sym, basis) @ np.asarray(f, dtype=complex)
    R = single_layer(sym, E, G) - double_layer(sym, E, phi, quad_tol)
    ts = np.asarray((0.05, 0.2, 0.5, 1.0, 2.0) if t_values is None else t_values, dtype=float) / c
    ref = np.abs(phi * c ** -np.arange(m)).max()
    up = lo = 0.0
    Ra, ua = R, u
    for a in range(m + 1):
        scale = ref * c**a
        up = max(up, float(np.abs(Ra.upper(ts) - ua(ts)).max() / scale))
        lo = max(lo, float(np.abs(Ra.lower(-ts)).max() / scale))
        Ra, ua = Ra.derivative(), ua.derivative()
    return {"upper": up, "lower": lo}


def duality_check(A: CoefTensor, xi, phi, f, g, gamma, quad_tol: float = 1e-9,
                  root_tol: float = DEFAULT_ROOT_TOL) -> dict:
    """Adjoint identities between ``A`` and ``A*`` at one frequency.

    Checks ``<phi, M^+ D^A f> = <M^+_{A*} D^{A*} phi, f>`` and
    ``<gamma, Tr S^L g> = <Tr S^{L*} gamma, g>``, plus
    ``E_{A*}(t) = conj(E_A(-t))``.

    Returns
    -------
    dict
        Relative deviations ``double``, ``single`` and ``kernel``.
    """
    B = A.adjoint()
    sA, sB = reduce(A, xi), reduce(B, xi)
    EA, EB = newton_kernel(sA, root_tol), newton_kernel(sB, root_tol)
    m = sA.m
    phi, f, g, gamma = (np.asarray(v, dtype=complex) for v in (phi, f, g, gamma))
    KA = double_layer(sA, EA, f, quad_tol).neumann(sA, "upper")
    KB = double_layer(sB, EB, phi, quad_tol).neumann(sB, "upper")
    dbl = _rel(np.vdot(phi, KA), np.vdot(KB, f))
    TA = single_layer(sA, EA, g).trace("upper", m)
    TB = single_layer(sB, EB, gamma).trace("upper", m)
    sgl = _rel(np.vdot(gamma, TA), np.vdot(TB, g))
    ts = np.array([0.05, 0.3, 1.0, 2.5]) / sA.scale
    ker = _rel(EB(ts), np.conj(EA(-ts)))
    ker = max(ker, _rel(EB(-ts), np.conj(EA(ts))))
    return {"double": dbl, "single": sgl, "kernel": ker}


# ----------------------------------------------------------------------
# Random tensors
# ----------------------------------------------------------------------


def _random_matrix(k: int, rng: np.random.Generator, hermitian: bool) -> np.ndarray:
    P = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
    if hermitian:
        P = 0.5 * (P + P.conj().T)
    return P / np.linalg.norm(P, 2)


def random_tensor(n: int, m: int, rng: np.random.Generator, delta: float = 0.3) -> CoefTensor:
    """Special operator plus a general complex perturbation of spectral norm ``delta``.

    The result is in general not self-adjoint, but the real part of its form
    on gradient arrays is bounded below by ``1 - delta``.
    """
    S = make_special_operator(n, m)
    return CoefTensor(n, m, S.entries + delta * _random_matrix(S.size, rng, hermitian=False))


def random_self_adjoint_tensor(n: int, m: int, rng: np.random.Generator, delta_max: float = 0.3,
                               min_lambda: float = 0.1, sphere_samples: int = 32,
                               max_tries: int = 100) -> CoefTensor:
    """Special operator plus a Hermitian perturbation, rejection-sampled.

    The perturbation has spectral norm ``delta ~ U(0, delta_max)``; samples are
    kept once the sampled slice constant exceeds ``min_lambda``.
    """
    S = make_special_operator(n, m)
    for _ in range(max_tries):
        delta = rng.uniform(0.0, delta_max)
        A = CoefTensor(n, m, S.entries + delta * _random_matrix(S.size, rng, hermitian=True))
        if check_self_adjoint(A, 1e-12) and slice_ellipticity(A, sphere_samples).lambda_slice > min_lambda:
            return A
    raise RuntimeError("rejection sampling did not produce an admissible tensor")
