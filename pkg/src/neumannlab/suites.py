"""Randomized verification suites shared by the CLI and the acceptance tests.

Each suite returns a plain dict report with ``passed``, the worst observed
deviations, the tolerances and up to ten failing cases (frequency and
values) so that a failure can be reproduced.
"""

from __future__ import annotations

import numpy as np

from .halfspace import FrequencyField, solve_neumann
from .norms import mode_norms, mode_norms_quadrature
from .operators import CoefTensor, check_self_adjoint, make_special_operator, slice_ellipticity, sphere_directions
from .symbol import DEFAULT_ROOT_TOL, mode_basis, reduce
from .verify import (
    continuation_certificate,
    duality_check,
    green_check,
    jump_check,
    random_self_adjoint_tensor,
    random_tensor,
    rellich_check,
)

__all__ = ["SUITES", "TOLERANCES", "run_suite", "random_frequency", "random_vector"]

TOLERANCES = {
    "rellich": 1e-9,
    "jumps_single": 1e-9,
    "jumps_double": 1e-6,
    "green": 1e-6,
    "adjoint": 1e-6,
    "norms": 1e-9,
}

SUITES = ("rellich", "jumps", "green", "adjoint", "continuation", "norms")


def random_frequency(n: int, rng: np.random.Generator, lo: float = 0.05, hi: float = 5.0) -> np.ndarray:
    """Random direction with log-uniform length in ``[lo, hi]``."""
    d = rng.standard_normal(n)
    d /= np.linalg.norm(d)
    return d * np.exp(rng.uniform(np.log(lo), np.log(hi)))


def random_vector(m: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal(m) + 1j * rng.standard_normal(m)


class _Tracker:
    def __init__(self):
        self.worst: dict[str, float] = {}
        self.failures: list[dict] = []

    def record(self, key: str, value: float, tol: float, **context) -> None:
        self.worst[key] = max(self.worst.get(key, 0.0), float(value))
        if not value <= tol and len(self.failures) < 10:
            self.failures.append({"check": key, "value": float(value), "tolerance": tol, **context})

    def fail(self, key: str, **context) -> None:
        self.worst[key] = float("inf")
        if len(self.failures) < 10:
            self.failures.append({"check": key, **context})


def _tensor_for_trial(A, random_tensors, rng, self_adjoint=True):
    if not random_tensors:
        return A
    if self_adjoint:
        return random_self_adjoint_tensor(A.n, A.m, rng, sphere_samples=16)
    return random_tensor(A.n, A.m, rng)


def _rellich(A, trials, rng, random_tensors, freqs_per_trial=4, root_tol=DEFAULT_ROOT_TOL, **_):
    tr = _Tracker()
    tol = TOLERANCES["rellich"]
    if not random_tensors:
        rep = slice_ellipticity(A, 32)
        if not (check_self_adjoint(A, 1e-12 * max(A.Lambda, 1.0)) and rep.lambda_slice > 0):
            tr.fail("rellich_margin", reason="operator is not self-adjoint and slice-elliptic",
                    lambda_slice=rep.lambda_slice)
            return tr
    for k in range(trials):
        At = _tensor_for_trial(A, random_tensors, rng)
        xi = np.array([random_frequency(At.n, rng) for _ in range(freqs_per_trial)])
        G = np.array([random_vector(At.m, rng) for _ in range(freqs_per_trial)])
        field = solve_neumann(At, FrequencyField(xi, np.ones(len(xi)), G), root_tol=root_tol)
        rep = rellich_check(At, field, sphere_samples=16)
        rel = -rep.margin / (1.0 + rep.rhs)
        tr.record("rellich_margin", max(rel, 0.0), tol, trial=k, lhs=rep.lhs, rhs=rep.rhs,
                  lambda_used=rep.lambda_used)
    return tr


def _jumps(A, trials, rng, random_tensors, quad_tol=1e-9, root_tol=DEFAULT_ROOT_TOL, **_):
    tr = _Tracker()
    for k in range(trials):
        At = _tensor_for_trial(A, random_tensors, rng)
        xi = random_frequency(At.n, rng)
        dev = jump_check(At, xi, random_vector(At.m, rng), random_vector(At.m, rng), quad_tol, root_tol)
        ctx = {"trial": k, "xi": [float(v) for v in xi]}
        tr.record("single_layer", max(dev["S_trace"], dev["S_neumann"]), TOLERANCES["jumps_single"], **ctx)
        tr.record("double_layer", max(dev["D_trace"], dev["D_neumann"]), TOLERANCES["jumps_double"], **ctx)
    return tr


def _green(A, trials, rng, random_tensors, quad_tol=1e-9, root_tol=DEFAULT_ROOT_TOL, **_):
    tr = _Tracker()
    for k in range(trials):
        At = _tensor_for_trial(A, random_tensors, rng)
        xi = random_frequency(At.n, rng)
        dev = green_check(At, xi, random_vector(At.m, rng), quad_tol=quad_tol, root_tol=root_tol)
        ctx = {"trial": k, "xi": [float(v) for v in xi]}
        tr.record("green_upper", dev["upper"], TOLERANCES["green"], **ctx)
        tr.record("green_lower", dev["lower"], TOLERANCES["green"], **ctx)
    return tr


def _adjoint(A, trials, rng, random_tensors, quad_tol=1e-9, root_tol=DEFAULT_ROOT_TOL, **_):
    tr = _Tracker()
    for k in range(trials):
        At = _tensor_for_trial(A, random_tensors, rng, self_adjoint=False)
        xi = random_frequency(At.n, rng)
        vecs = [random_vector(At.m, rng) for _ in range(4)]
        dev = duality_check(At, xi, *vecs, quad_tol=quad_tol, root_tol=root_tol)
        tr.record("adjoint", max(dev.values()), TOLERANCES["adjoint"], trial=k, xi=[float(v) for v in xi])
    return tr


def _continuation(A, trials, rng, random_tensors, angular=8, **_):
    tr = _Tracker()
    A0 = make_special_operator(A.n, A.m)
    targets = [A]
    if random_tensors:
        targets = [random_self_adjoint_tensor(A.n, A.m, rng, sphere_samples=16) for _ in range(trials)]
    dirs = sphere_directions(A.n, angular)
    for k, A1 in enumerate(targets):
        rep = continuation_certificate(A0, A1, dirs)
        if rep.success:
            tr.record("continuation", 0.0, 0.0, trial=k)
        else:
            tr.fail("continuation", trial=k, failure_point=rep.failure_point, steps=len(rep.schedule))
    return tr


def _norms(A, trials, rng, random_tensors, root_tol=DEFAULT_ROOT_TOL, **_):
    tr = _Tracker()
    for k in range(trials):
        At = _tensor_for_trial(A, random_tensors, rng)
        xi = random_frequency(At.n, rng)
        sym = reduce(At, xi)
        basis = mode_basis(sym, "upper", root_tol)
        f = random_vector(At.m, rng)
        a, q = mode_norms(sym, basis, f), mode_norms_quadrature(sym, basis, f)
        dev = max(abs(a.square_function / q.square_function - 1),
                  abs(a.square_function_rough / q.square_function_rough - 1))
        tr.record("gram_vs_quadrature", dev, TOLERANCES["norms"], trial=k, xi=[float(v) for v in xi])
    return tr


_RUNNERS = {
    "rellich": _rellich,
    "jumps": _jumps,
    "green": _green,
    "adjoint": _adjoint,
    "continuation": _continuation,
    "norms": _norms,
}


def run_suite(suite: str, A: CoefTensor, trials: int, seed: int, random_tensors: bool = False, **options) -> dict:
    """Run one verification suite.

    Parameters
    ----------
    suite : str
        One of :data:`SUITES`.
    A : CoefTensor
        Configured operator; with ``random_tensors`` only its ``n`` and
        ``m`` are used and every trial draws a fresh tensor.
    trials : int
    seed : int
    options
        ``quad_tol``, ``root_tol``, ``angular`` forwarded to the suite.

    Returns
    -------
    dict
        Report with ``passed``, ``max_deviation`` and ``failures``.
    """
    if suite not in _RUNNERS:
        raise ValueError(f"unknown suite {suite!r}")
    rng = np.random.default_rng(seed)
    tr = _RUNNERS[suite](A, trials, rng, random_tensors, **options)
    return {
        "suite": suite,
        "trials": int(trials),
        "seed": int(seed),
        "random_tensors": bool(random_tensors),
        "passed": not tr.failures,
        "max_deviation": tr.worst,
        "failures": tr.failures,
    }
