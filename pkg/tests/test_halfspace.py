import warnings

import numpy as np
import pytest
import sympy as sp
from conftest import unit_xi
from scipy.special import erf

from neumannlab.halfspace import (
    ILL_POSED,
    OK,
    FrequencyField,
    conormal_matrix,
    dirichlet_map,
    dtn_map,
    frequency_grid,
    neumann_map,
    sine_matrix,
    solve_dirichlet,
    solve_neumann,
    special_neumann_matrix,
    synthesize,
)
from neumannlab.operators import CoefTensor, make_biharmonic_rho, make_special_operator
from neumannlab.symbol import mode_basis, reduce, special_roots
from neumannlab.verify import random_self_adjoint_tensor

# Frozen Neumann matrix of the special operator, m = 2, 2 pi |xi| = 1, over the
# exact decaying roots exp(+-5 pi i/6) of lam^4 - lam^2 + 1.
SPECIAL_M2_N = np.array(
    [
        [np.sqrt(3) / 2 + 0.5j, np.sqrt(3) / 2 - 0.5j],
        [-0.5 + 0.5j * np.sqrt(3), -0.5 - 0.5j * np.sqrt(3)],
    ]
)


def test_frozen_special_matrix_symbolic_oracle():
    # with C = I the conormal rows are G_0 = w''' - w' and G_1 = -w''
    lam = sp.symbols("lam")
    roots = [sp.exp(5 * sp.pi * sp.I / 6), sp.exp(-5 * sp.pi * sp.I / 6)]
    assert all(sp.simplify(sp.expand_complex((lam**4 - lam**2 + 1).subs(lam, r))) == 0 for r in roots)
    rows = [lam**3 - lam, -(lam**2)]
    exact = np.array([[complex(sp.N(row.subs(lam, r), 30)) for r in roots] for row in rows])
    assert np.allclose(exact, SPECIAL_M2_N, atol=1e-15)


def test_dirichlet_map_double_root():
    basis = mode_basis(reduce(make_biharmonic_rho(1, 0.0), unit_xi(1)))
    assert np.allclose(dirichlet_map(basis), [[1, 0], [-1, 1]], atol=1e-14)


@pytest.mark.parametrize("xi", [0.05, 0.3, 2.0])
def test_laplacian_neumann_map(xi):
    sym = reduce(make_special_operator(1, 1), [xi])
    N = neumann_map(sym, mode_basis(sym))
    assert N.shape == (1, 1)
    assert N[0, 0] == pytest.approx(2 * np.pi * xi, rel=1e-13)


def test_special_m2_neumann_matrix_frozen():
    xi = unit_xi(1)
    sym = reduce(make_special_operator(1, 2), xi)
    assert np.allclose(neumann_map(sym, special_roots(xi, 2)), SPECIAL_M2_N, atol=1e-14)
    assert np.allclose(special_neumann_matrix(xi, 2), SPECIAL_M2_N, atol=1e-14)


@pytest.mark.parametrize("m", [1, 2, 3, 4, 6, 8])
def test_special_closed_form_matches_conormal(m, rng):
    xi = rng.normal(size=2)
    sym = reduce(make_special_operator(2, m), xi)
    N = neumann_map(sym, special_roots(xi, m))
    ref = special_neumann_matrix(xi, m)
    assert np.allclose(N, ref, rtol=1e-10, atol=1e-12 * np.abs(ref).max())


def test_biharmonic_neumann_and_dtn():
    rho = 0.3
    sym = reduce(make_biharmonic_rho(1, rho), unit_xi(1))
    basis = mode_basis(sym)
    assert np.allclose(neumann_map(sym, basis), [[1 - rho, 1 + rho], [rho - 1, 2]], atol=1e-13)
    L = dtn_map(sym)
    assert np.allclose(L, [[2, 1 + rho], [1 + rho, 2]], atol=1e-12)
    assert np.linalg.det(L).real == pytest.approx((1 - rho) * (3 + rho), rel=1e-12)


def test_dtn_is_hermitian_for_self_adjoint(rng):
    for _ in range(5):
        A = random_self_adjoint_tensor(2, 3, rng, sphere_samples=8)
        sym = reduce(A, rng.normal(size=2))
        L = dtn_map(sym)
        assert np.allclose(L, L.conj().T, atol=1e-9 * np.abs(L).max())
        basis = mode_basis(sym)
        ref = neumann_map(sym, basis) @ np.linalg.inv(dirichlet_map(basis))
        assert np.allclose(L, ref, atol=1e-8 * np.abs(L).max())


@pytest.mark.parametrize("m", [1, 2, 3, 5, 8])
def test_sine_matrix_square_identity(m):
    M, Minv = sine_matrix(m)
    assert np.allclose(M @ M, (m + 1) / 2 * np.eye(m), atol=1e-12)
    assert np.allclose(M @ Minv, np.eye(m), atol=1e-12)


def test_conormal_lower_is_negated():
    sym = reduce(make_special_operator(1, 2), [0.3])
    assert np.allclose(conormal_matrix(sym, "lower"), -conormal_matrix(sym, "upper"))


def test_rho_one_all_ill_posed():
    xi, w = frequency_grid(1, 0.1, 1.0, radial=4)
    data = FrequencyField(xi, w, np.ones((len(w), 2)))
    with pytest.warns(RuntimeWarning, match="slice-elliptic"):
        sol = solve_neumann(make_biharmonic_rho(1, 1.0), data)
    assert all(s == ILL_POSED for s in sol.status)
    assert np.all(np.isnan(sol.values))


@pytest.mark.parametrize("halfspace", ["upper", "lower"])
def test_neumann_solve_roundtrip(halfspace, rng):
    A = make_biharmonic_rho(2, -0.4)
    xi, w = frequency_grid(2, 0.05, 3.0, radial=6, angular=5)
    G = rng.normal(size=(len(w), 2)) + 1j * rng.normal(size=(len(w), 2))
    sol = solve_neumann(A, FrequencyField(xi, w, G), halfspace=halfspace)
    assert sol.all_ok
    for mc, g in zip(sol.modes, G):
        assert mc.basis.halfspace == halfspace
        assert np.allclose(neumann_map(mc.sym, mc.basis) @ mc.f, g, rtol=1e-10)
    trace = np.array([dirichlet_map(mc.basis) @ mc.f for mc in sol.modes])
    back = solve_dirichlet(A, FrequencyField(xi, w, trace, "trace"), halfspace=halfspace)
    assert np.allclose(back.values, sol.values, rtol=1e-8)


def test_solve_validates_payload():
    data = FrequencyField([[0.3]], [1.0], [[1.0, 2.0, 3.0]])
    with pytest.raises(ValueError):
        solve_neumann(make_special_operator(1, 2), data)
    with pytest.raises(ValueError):
        FrequencyField([[0.0]], [1.0], [[1.0]])
    with pytest.raises(ValueError):
        FrequencyField([[0.1]], [0.0], [[1.0]])


def test_non_self_adjoint_warns(rng):
    E = make_special_operator(1, 1).entries.astype(complex)
    E[0, 1] = 0.1j
    with pytest.warns(RuntimeWarning):
        solve_neumann(CoefTensor(1, 1, E), FrequencyField([[0.3]], [1.0], [[1.0]]))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        solve_neumann(make_special_operator(1, 1), FrequencyField([[0.3]], [1.0], [[1.0]]))


def test_frequency_grid_quadrature():
    # int exp(-|xi|^2) over the annulus 0.1 <= |xi| <= 2, with closed forms
    for n, exact in [
        (1, np.sqrt(np.pi) * (erf(2) - erf(0.1))),
        (2, np.pi * (np.exp(-0.01) - np.exp(-4))),
    ]:
        xi, w = frequency_grid(n, 0.1, 2.0, radial=256, angular=16)
        r = np.linalg.norm(xi, axis=1)
        assert np.sum(w * np.exp(-r**2)) == pytest.approx(exact, rel=1e-4)
    xi, _ = frequency_grid(2, angular=8)
    assert np.all(np.abs(xi) > 0)


def test_synthesize_single_mode():
    xi0 = np.array([0.2])
    sol = solve_neumann(make_special_operator(1, 1), FrequencyField([xi0], [0.5], [[1.0]]))
    c = 2 * np.pi * 0.2
    x = np.array([[0.0], [0.7]])
    t = np.array([0.0, 0.4])
    vals = synthesize(sol, x, t, order=0)
    # G = c f, so w = e^{-ct}/c times the phase
    expected = 0.5 / c * np.exp(2j * np.pi * 0.2 * x[:, 0])[:, None] * np.exp(-c * t)[None, :]
    assert np.allclose(vals[0], expected, rtol=1e-13)
    grad = synthesize(sol, x, t, order=1)
    assert np.allclose(grad[0], 2j * np.pi * 0.2 * expected)
    assert np.allclose(grad[1], -c * expected)


def test_synthesize_real_for_hermitian_data(rng):
    xi, w = frequency_grid(1, 0.1, 2.0, radial=5)
    half = len(w) // 2
    G = np.zeros((len(w), 2), dtype=complex)
    # rows alternate +xi, -xi; give -xi the conjugate data
    G[0::2] = rng.normal(size=(half, 2)) + 1j * rng.normal(size=(half, 2))
    G[1::2] = np.conj(G[0::2])
    assert np.allclose(xi[1::2], -xi[0::2])
    sol = solve_neumann(make_biharmonic_rho(1, 0.2), FrequencyField(xi, w, G))
    vals = synthesize(sol, rng.normal(size=(4, 1)), [0.0, 0.3], order=1)
    assert np.abs(vals.imag).max() < 1e-12 * np.abs(vals).max()


def test_neumann_map_homogeneity(rng):
    A = random_self_adjoint_tensor(2, 2, rng, sphere_samples=8)
    xi = rng.normal(size=2)
    s = 2.5
    N1 = dtn_map(reduce(A, xi))
    N2 = dtn_map(reduce(A, s * xi))
    # Lambda_{l k} scales like |xi|^{2m-1-l-k}
    m = 2
    l = np.arange(m)
    expo = 2 * m - 1 - l[:, None] - l[None, :]
    assert np.allclose(N2, N1 * s**expo, rtol=1e-9)


def test_ok_status_and_cond():
    sol = solve_neumann(make_special_operator(1, 2), FrequencyField([[0.3], [-1.0]], [1.0, 1.0], np.ones((2, 2))))
    assert sol.status == (OK, OK)
    assert np.all(np.isfinite(sol.cond)) and np.all(sol.cond >= 1)
