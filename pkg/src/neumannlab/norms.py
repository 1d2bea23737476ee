"""Solution and data norms as per-frequency quadratic forms.

Every norm is ``int F(xi) d xi`` for a per-frequency quantity ``F`` and is
approximated by the weighted sum over a :class:`FrequencyField`.

Per-frequency forms for a mode solution ``w`` (``z = 2 pi i xi``):

* ``|grad^m w(t)|^2 = sum_a omega_a |w^{(a)}(t)|^2`` (slice energy).
* ``square_function = int_0^inf t sum_a omega_a |w^{(a+1)}|^2 dt``.
* ``square_function_rough = int_0^inf t sum_a omega_a |w^{(a)}|^2 dt``.

Data forms for a trace vector ``phi`` and a Neumann vector ``G``:

* ``whitney_L2 = sum_l omega'_l |phi_l|^2`` where ``omega'_l = sum_{|mu| = m-1-l} |z^mu|^2``,
  the squared ``L^2`` norm of all order-``(m-1)`` derivative traces.
* ``whitney_W1 = 4 pi^2 |xi|^2 * whitney_L2`` and ``besov_half = |xi| * whitney_L2``.
* ``neumann_L2_weighted = sum_l |G_l|^2 |xi|^{2l+2-2m}``.
* ``neumann_Wminus1_weighted = sum_l |G_l|^2 |xi|^{2l-2m}``.

The two Neumann quantities are weighted ``L^2`` proxies for dual norms.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from math import pi

import numpy as np
from scipy.integrate import quad_vec

from .exppoly import gram_integral
from .halfspace import OK, FrequencyField, ModeField, dirichlet_map, neumann_map
from .multiindex import enumerate_multiindices
from .symbol import ModeBasis, ReducedSymbol

__all__ = [
    "NormReport",
    "ModeNorms",
    "gram_integral",
    "mode_norms",
    "mode_norms_quadrature",
    "whitney_weights",
    "data_norms",
    "sup_time_grid",
    "solution_norms",
    "norm_report",
]

PROXY_FIELDS = ("neumann_L2_weighted", "neumann_Wminus1_weighted")


@dataclass(frozen=True)
class NormReport:
    """Integrated norms of a solution and its boundary data (all squared)."""

    square_function: float
    square_function_rough: float
    sup_L2: float
    whitney_L2: float
    whitney_W1: float
    besov_half: float
    neumann_L2_weighted: float
    neumann_Wminus1_weighted: float

    def to_json(self) -> dict:
        out = {k: float(v) for k, v in asdict(self).items()}
        out["proxy_fields"] = list(PROXY_FIELDS)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "NormReport":
        return cls(**{k: float(obj[k]) for k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class ModeNorms:
    """Per-frequency contributions of one mode solution."""

    square_function: float
    square_function_rough: float
    energy_at_zero: float


def _slice_weights(sym: ReducedSymbol) -> np.ndarray:
    return np.asarray(sym.omega, dtype=float)


def mode_norms(sym: ReducedSymbol, basis: ModeBasis, f) -> ModeNorms:
    """Closed-form square-function contributions of ``w = sum f_k basis_k``.

    Parameters
    ----------
    sym : ReducedSymbol
    basis : ModeBasis
        Upper (decaying) basis.
    f : array_like
        Mode coefficients.
    """
    w = basis.combination(f)
    om = _slice_weights(sym)
    m = sym.m
    ders = [w]
    for _ in range(m + 1):
        ders.append(ders[-1].derivative())
    sq = sum(om[a] * ders[a + 1].inner(ders[a + 1], weight=1).real for a in range(m + 1))
    sq_rough = sum(om[a] * ders[a].inner(ders[a], weight=1).real for a in range(m + 1))
    e0 = sum(om[a] * abs(ders[a](0.0)) ** 2 for a in range(m + 1))
    return ModeNorms(float(sq), float(sq_rough), float(e0))


def mode_norms_quadrature(sym: ReducedSymbol, basis: ModeBasis, f, epsrel: float = 1e-12) -> ModeNorms:
    """Same quantities as :func:`mode_norms` by adaptive quadrature in ``t``.

    Serves as an oracle for the closed-form Gram evaluation.
    """
    w = basis.combination(f)
    om = _slice_weights(sym)
    m = sym.m
    ders = [w]
    for _ in range(m + 1):
        ders.append(ders[-1].derivative())

    def integrand(t):
        vals = np.array([abs(d(t)) ** 2 for d in ders])
        return np.array([t * om @ vals[1:], t * om @ vals[:-1]])

    T = 60.0 / basis.slowest_rate
    val, _ = quad_vec(integrand, 0.0, T, epsabs=0.0, epsrel=epsrel, limit=4000)
    e0 = sum(om[a] * abs(ders[a](0.0)) ** 2 for a in range(m + 1))
    return ModeNorms(float(val[0]), float(val[1]), float(e0))


def whitney_weights(xi, m: int) -> np.ndarray:
    """``omega'_l(xi) = sum_{|mu| = m-1-l} |(2 pi xi)^mu|^2`` for ``l = 0..m-1``."""
    xi = np.asarray(xi, dtype=float).reshape(-1)
    n = xi.size
    out = np.zeros(m)
    for gm in enumerate_multiindices(n + 1, m - 1):
        out[gm[-1]] += np.prod((2 * pi * xi) ** (2 * np.asarray(gm[:-1])))
    return out


def data_norms(data: FrequencyField, m: int) -> dict:
    """Integrated data norms of a trace field or a Neumann field.

    Returns
    -------
    dict
        ``whitney_L2``, ``whitney_W1`` and ``besov_half`` for ``kind="trace"``;
        ``neumann_L2_weighted`` and ``neumann_Wminus1_weighted`` for
        ``kind="neumann"``.
    """
    v = np.abs(data.values) ** 2
    if v.shape[1] != m:
        raise ValueError(f"payload has {v.shape[1]} components, expected {m}")
    r = np.linalg.norm(data.xi, axis=1)
    w = data.weights
    if data.kind == "trace":
        per = np.array([whitney_weights(x, m) @ vi for x, vi in zip(data.xi, v)])
        return {
            "whitney_L2": float(np.sum(w * per)),
            "whitney_W1": float(np.sum(w * per * (2 * pi * r) ** 2)),
            "besov_half": float(np.sum(w * per * r)),
        }
    if data.kind == "neumann":
        l = np.arange(m)
        reg = (v * r[:, None] ** (2 * l + 2 - 2 * m)).sum(axis=1)
        rough = (v * r[:, None] ** (2 * l - 2 * m)).sum(axis=1)
        return {
            "neumann_L2_weighted": float(np.sum(w * reg)),
            "neumann_Wminus1_weighted": float(np.sum(w * rough)),
        }
    raise ValueError(f"unsupported payload kind {data.kind!r}")


def sup_time_grid(xi_norms) -> np.ndarray:
    """``t = 0`` plus 64 log-spaced points per decade on ``[1e-3/max|xi|, 1e3/min|xi|]``."""
    lo = 1e-3 / float(np.max(xi_norms))
    hi = 1e3 / float(np.min(xi_norms))
    decades = np.log10(hi / lo)
    count = int(np.ceil(64 * decades)) + 1
    return np.concatenate([[0.0], np.geomspace(lo, hi, count)])


def solution_norms(field: ModeField, t_grid=None) -> dict:
    """Square functions and ``sup_t ||grad^m w(., t)||^2`` of a solution field.

    Ill-posed frequencies are skipped.
    """
    ok = [i for i, s in enumerate(field.status) if s == OK]
    if t_grid is None:
        t_grid = sup_time_grid(np.linalg.norm(field.xi[ok], axis=1)) if ok else np.zeros(1)
    sq = sq_rough = 0.0
    energy = np.zeros(len(t_grid))
    for i in ok:
        mc = field.modes[i]
        wt = field.weights[i]
        contrib = mode_norms(mc.sym, mc.basis, mc.f)
        sq += wt * contrib.square_function
        sq_rough += wt * contrib.square_function_rough
        prof = mc.profile
        om = _slice_weights(mc.sym)
        for a in range(mc.sym.m + 1):
            energy += wt * om[a] * np.abs(prof(t_grid)) ** 2
            prof = prof.derivative()
    return {
        "square_function": float(sq),
        "square_function_rough": float(sq_rough),
        "sup_L2": float(energy.max()) if energy.size else 0.0,
    }


def boundary_fields(field: ModeField) -> tuple[FrequencyField, FrequencyField]:
    """Trace and Neumann data of a solution field (ill-posed rows are dropped)."""
    ok = np.array([s == OK for s in field.status], dtype=bool)
    tr, ne = [], []
    for i in np.flatnonzero(ok):
        mc = field.modes[i]
        tr.append(dirichlet_map(mc.basis) @ mc.f)
        ne.append(neumann_map(mc.sym, mc.basis) @ mc.f)
    xi, w = field.xi[ok], field.weights[ok]
    if not ok.any():
        raise ValueError("no well-posed frequencies")
    return (FrequencyField(xi, w, np.array(tr), "trace"), FrequencyField(xi, w, np.array(ne), "neumann"))


def norm_report(field: ModeField, t_grid=None) -> NormReport:
    """All eight norms of a solution field."""
    m = field.values.shape[1]
    trace, neumann = boundary_fields(field)
    vals = solution_norms(field, t_grid)
    vals.update(data_norms(trace, m))
    vals.update(data_norms(neumann, m))
    return NormReport(**vals)
