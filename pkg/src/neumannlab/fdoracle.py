"""Finite-difference two-point boundary value oracle for the reduced ODE.

The per-frequency ODE ``sum_k p_k w^{(k)} = 0`` is discretized on a uniform
grid over ``[0, T]`` with ``T = 12/|Re lam_min|`` (``lam_min`` is the slowest
decaying root).  The ``m`` boundary rows at ``t = 0`` carry the Neumann or
Dirichlet data, and the ``m`` rows at ``t = T`` impose ``w^{(j)}(T) = 0``,
``j < m``.  The solver shares nothing with the mode-basis pipeline except
the characteristic polynomial and the conormal matrix.
"""

from __future__ import annotations

from math import factorial

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .halfspace import conormal_matrix
from .symbol import ReducedSymbol

__all__ = ["stencil_weights", "fd_bvp"]


def stencil_weights(offsets, k: int) -> np.ndarray:
    """Weights ``c_j`` with ``sum_j c_j u(x_j) = u^{(k)}(0) + O(h^{len - k})``.

    ``offsets`` are node positions in units of the grid spacing.
    """
    x = np.asarray(offsets, dtype=float)
    V = np.vander(x, increasing=True).T / np.array([factorial(p) for p in range(x.size)])[:, None]
    rhs = np.zeros(x.size)
    rhs[k] = 1.0
    return np.linalg.solve(V, rhs)


def _window(i: int, width: int, npts: int) -> np.ndarray:
    start = min(max(i - width // 2, 0), npts - width)
    return np.arange(start, start + width)


def _row(i: int, k: int, npts: int, h: float, accuracy: int) -> tuple[np.ndarray, np.ndarray]:
    width = k + accuracy
    if width % 2 == 0:
        width += 1
    cols = _window(i, width, npts)
    return cols, stencil_weights(cols - i, k) / h**k


def fd_bvp(sym: ReducedSymbol, data, problem: str = "neumann", npts: int = 4096,
           T: float | None = None, accuracy: int = 6) -> dict:
    """Solve the truncated two-point problem by finite differences.

    Parameters
    ----------
    sym : ReducedSymbol
    data : array_like
        Neumann vector ``G`` or trace vector ``phi`` of length ``m``.
    problem : {"neumann", "dirichlet"}
    npts : int
        Number of grid points.
    T : float, optional
        Truncation length; defaults to ``12/|Re lam_min|``.
    accuracy : int
        Nominal order of the stencils.

    Returns
    -------
    dict
        ``traces`` (``w^{(l)}(0)``, ``l < m``), ``neumann`` (conormal vector),
        ``t`` and ``w`` (grid solution).
    """
    m = sym.m
    p = np.asarray(sym.charpoly, dtype=complex)
    if T is None:
        rates = np.abs(np.roots(p[::-1]).real)
        T = 12.0 / rates.min()
    h = T / (npts - 1)
    rows, cols, vals = [], [], []
    rhs = np.zeros(npts, dtype=complex)

    def put(r, cs, ws):
        rows.extend([r] * len(cs))
        cols.extend(cs)
        vals.extend(ws)

    def deriv_at(i, k):
        return _row(i, k, npts, h, accuracy)

    data = np.asarray(data, dtype=complex)
    if problem == "neumann":
        B = conormal_matrix(sym, "upper")
        for l in range(m):
            for j in range(2 * m):
                if B[l, j] != 0:
                    cs, ws = deriv_at(0, j)
                    put(l, cs, B[l, j] * ws)
            rhs[l] = data[l]
    elif problem == "dirichlet":
        for l in range(m):
            cs, ws = deriv_at(0, l)
            put(l, cs, ws)
            rhs[l] = data[l]
    else:
        raise ValueError("problem must be 'neumann' or 'dirichlet'")
    for i in range(m, npts - m):
        for k in range(2 * m + 1):
            if p[k] != 0:
                cs, ws = deriv_at(i, k)
                put(i, cs, p[k] * ws)
    for l in range(m):
        cs, ws = deriv_at(npts - 1, l)
        put(npts - m + l, cs, ws)
    M = scipy.sparse.csc_matrix((vals, (rows, cols)), shape=(npts, npts), dtype=complex)
    w = scipy.sparse.linalg.spsolve(M, rhs)
    d = np.array([deriv_at(0, j)[1] @ w[deriv_at(0, j)[0]] for j in range(2 * m)])
    return {
        "traces": d[:m],
        "neumann": conormal_matrix(sym, "upper") @ d,
        "t": np.linspace(0.0, T, npts),
        "w": w,
    }
