import numpy as np
import pytest
from conftest import unit_xi

from neumannlab.halfspace import dirichlet_map, neumann_map
from neumannlab.operators import make_biharmonic_rho, make_special_operator
from neumannlab.potentials import (
    double_layer,
    double_layer_pointwise,
    extension_E,
    neumann_array,
    neumann_via_E,
    newton_kernel,
    reduce_neumann_array,
    single_layer,
)
from neumannlab.symbol import mode_basis, reduce
from neumannlab.verify import random_self_adjoint_tensor, random_tensor

T_POS = np.array([0.05, 0.4, 1.0, 3.0])


def kernel_residual(sym, E, t):
    """``P(d/dt) E`` at heights ``t`` away from 0."""
    p = sym.charpoly
    return sum(p[k] * E.derivative(k)(t) for k in range(p.size))


@pytest.mark.parametrize("xi", [0.1, 1 / (2 * np.pi), 1.7])
def test_laplacian_kernel(xi):
    sym = reduce(make_special_operator(1, 1), [xi])
    E = newton_kernel(sym)
    c = 2 * np.pi * xi
    t = T_POS / c
    assert np.allclose(E(t), np.exp(-c * t) / (2 * c), rtol=1e-13)
    assert np.allclose(E(-t), np.exp(-c * t) / (2 * c), rtol=1e-13)


def test_biharmonic_kernel_frozen():
    # E_+ = (1 + t) e^{-t}/4 and E_- = (1 - t) e^{t}/4 at 2 pi |xi| = 1
    sym = reduce(make_biharmonic_rho(1, 0.4), unit_xi(1))
    E = newton_kernel(sym)
    assert np.allclose(E.upper(T_POS), (1 + T_POS) * np.exp(-T_POS) / 4, rtol=1e-12)
    assert np.allclose(E.lower(-T_POS), (1 + T_POS) * np.exp(-T_POS) / 4, rtol=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_kernel_invariants(seed):
    rng = np.random.default_rng(seed)
    m = 1 + seed % 3
    A = random_tensor(2, m, rng)
    sym = reduce(A, rng.normal(size=2))
    E = newton_kernel(sym)
    c = sym.scale
    # E^{(j)} continuous for j < 2m - 1, jump 1/lead in E^{(2m-1)}
    for j in range(2 * m):
        up = E.upper.derivative(j)(0.0)
        lo = E.lower.derivative(j)(0.0)
        scale = c ** (j + 1 - 2 * m) / abs(sym.lead)
        target = 1 / sym.lead if j == 2 * m - 1 else 0.0
        assert abs(up - lo - target) < 1e-10 * scale
    res = kernel_residual(sym, E, np.concatenate([T_POS, -T_POS]) / c)
    assert np.abs(res).max() < 1e-9 * c
    assert E.upper.decays() and E.lower.reflect().decays()


def test_neumann_array_roundtrip_and_independence(rng):
    A = random_self_adjoint_tensor(3, 3, rng, sphere_samples=8)
    xi = rng.normal(size=3)
    sym = reduce(A, xi)
    g = rng.normal(size=3) + 1j * rng.normal(size=3)
    for dist in ("smooth", "axis"):
        assert np.allclose(reduce_neumann_array(sym, neumann_array(sym, g, dist)), g, rtol=1e-12)
    E = newton_kernel(sym)
    S1 = single_layer(sym, E, g, "smooth")
    S2 = single_layer(sym, E, g, "axis")
    t = T_POS / sym.scale
    assert np.allclose(S1(t), S2(t), rtol=1e-11)
    assert np.allclose(S1(-t), S2(-t), rtol=1e-11)
    with pytest.raises(ValueError):
        neumann_array(sym, g, "bogus")


def test_laplacian_single_layer():
    xi = 0.3
    c = 2 * np.pi * xi
    sym = reduce(make_special_operator(1, 1), [xi])
    S = single_layer(sym, newton_kernel(sym), [2.0])
    t = np.array([0.1, 1.0])
    assert np.allclose(S(t), np.exp(-c * t) / c)
    assert np.allclose(S(-t), np.exp(-c * t) / c)
    # M^+ + M^- = g
    assert S.neumann(sym, "upper") + S.neumann(sym, "lower") == pytest.approx([2.0])


def test_extension_operator_traces_and_cutoff(rng):
    m = 3
    xi = rng.normal(size=2)
    c = 2 * np.pi * np.linalg.norm(xi)
    phi = rng.normal(size=m) + 1j * rng.normal(size=m)
    vals = extension_E(phi, xi, [0.0])
    assert vals.shape == (m + 1, 1)
    assert np.allclose(vals[:m, 0], phi, rtol=1e-15)
    far = extension_E(phi, xi, [3.0 / c])
    assert np.abs(far).max() < 1e-100 * np.abs(phi).max() * c**m
    # derivatives against central differences
    t0, h = 0.4 / c, 1e-5 / c
    mid = extension_E(phi, xi, [t0 - h, t0, t0 + h])
    fd = (mid[:m, 2] - mid[:m, 0]) / (2 * h)
    assert np.allclose(fd, mid[1:, 1], rtol=1e-6, atol=1e-8 * np.abs(mid).max() * c)


@pytest.mark.parametrize("case", ["laplace", "biharmonic", "special3", "random2"])
def test_double_layer_matches_pointwise(case, rng):
    A = {
        "laplace": make_special_operator(1, 1),
        "biharmonic": make_biharmonic_rho(2, -0.5),
        "special3": make_special_operator(1, 3),
        "random2": random_self_adjoint_tensor(2, 2, rng, sphere_samples=8),
    }[case]
    xi = rng.normal(size=A.n)
    sym = reduce(A, xi)
    E = newton_kernel(sym)
    f = rng.normal(size=A.m) + 1j * rng.normal(size=A.m)
    D, err = double_layer(sym, E, f, quad_tol=1e-11, return_error=True)
    assert err < 1e-8
    for t in (0.3 / sym.scale, 1.5 / sym.scale, -0.5 / sym.scale):
        direct = double_layer_pointwise(sym, E, f, t, upto=A.m - 1)
        closed = np.array([D.derivative(j)(t) for j in range(A.m)])
        assert np.allclose(closed, direct, rtol=1e-8, atol=1e-9 * np.abs(direct).max())
    with pytest.raises(ValueError):
        double_layer_pointwise(sym, E, f, 0.1, upto=A.m)


@pytest.mark.parametrize("halfspace", ["upper", "lower"])
def test_neumann_via_extension(halfspace, rng):
    A = random_self_adjoint_tensor(2, 2, rng, sphere_samples=8)
    xi = rng.normal(size=2)
    sym = reduce(A, xi)
    basis = mode_basis(sym, halfspace)
    f = rng.normal(size=2) + 1j * rng.normal(size=2)
    G = neumann_map(sym, basis) @ f
    phi = rng.normal(size=2) + 1j * rng.normal(size=2)
    got = neumann_via_E(sym, basis.combination(f), phi, halfspace)
    assert got == pytest.approx(np.vdot(phi, G), rel=1e-6)
    assert neumann_via_E(sym, basis.combination(f), np.zeros(2), halfspace) == 0
    assert np.allclose(dirichlet_map(basis) @ f, basis.combination(f).derivatives_at(0.0, 1))
