import json

import numpy as np
import pytest
from conftest import unit_xi

from neumannlab.halfspace import FrequencyField, frequency_grid, solve_neumann
from neumannlab.norms import (
    NormReport,
    data_norms,
    mode_norms,
    mode_norms_quadrature,
    norm_report,
    solution_norms,
    sup_time_grid,
    whitney_weights,
)
from neumannlab.operators import make_biharmonic_rho, make_special_operator
from neumannlab.symbol import mode_basis, reduce
from neumannlab.verify import random_self_adjoint_tensor


def test_laplacian_square_function_half():
    # w = e^{-t}: int_0^inf t (|w'|^2 + |w''|^2) dt = 2 * 1/4
    sym = reduce(make_special_operator(1, 1), unit_xi(1))
    mn = mode_norms(sym, mode_basis(sym), [1.0])
    assert mn.square_function == pytest.approx(0.5, rel=1e-15)
    assert mn.square_function_rough == pytest.approx(0.5, rel=1e-15)
    assert mn.energy_at_zero == pytest.approx(2.0, rel=1e-15)


def test_zero_modes_give_zero():
    sym = reduce(make_biharmonic_rho(1, 0.2), [0.4])
    mn = mode_norms(sym, mode_basis(sym), [0.0, 0.0])
    assert (mn.square_function, mn.square_function_rough, mn.energy_at_zero) == (0.0, 0.0, 0.0)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_gram_matches_quadrature(m, rng):
    for _ in range(3):
        A = random_self_adjoint_tensor(2, m, rng, sphere_samples=8)
        sym = reduce(A, rng.normal(size=2))
        basis = mode_basis(sym)
        f = rng.normal(size=m) + 1j * rng.normal(size=m)
        a, q = mode_norms(sym, basis, f), mode_norms_quadrature(sym, basis, f)
        assert a.square_function == pytest.approx(q.square_function, rel=1e-9)
        assert a.square_function_rough == pytest.approx(q.square_function_rough, rel=1e-9)


def test_whitney_weights():
    xi = np.array([0.3, -0.2])
    z2 = (2 * np.pi) ** 2 * (xi @ xi)
    assert np.allclose(whitney_weights(xi, 1), [1.0])
    w2 = whitney_weights(xi, 2)
    assert w2[1] == 1.0 and w2[0] == pytest.approx(z2)
    # order-2 horizontal monomials: sum |z^mu|^2 over |mu| = 2 is not |z|^4 (no multinomial weights)
    a, b = (2 * np.pi * xi) ** 2
    assert whitney_weights(xi, 3)[0] == pytest.approx(a * a + a * b + b * b)


def test_data_norms_m1_and_scaling():
    xi = np.array([[0.5], [-2.0]])
    w = np.array([1.0, 0.5])
    phi = FrequencyField(xi, w, [[1.0], [2j]], "trace")
    d = data_norms(phi, 1)
    assert d["whitney_L2"] == pytest.approx(1.0 + 0.5 * 4)
    assert d["whitney_W1"] == pytest.approx((2 * np.pi) ** 2 * (0.25 + 0.5 * 4 * 4))
    assert d["besov_half"] == pytest.approx(0.5 + 0.5 * 4 * 2)
    G = FrequencyField(xi, w, [[1.0], [2.0]], "neumann")
    g = data_norms(G, 1)
    assert g["neumann_L2_weighted"] == pytest.approx(1.0 + 0.5 * 4)
    assert g["neumann_Wminus1_weighted"] == pytest.approx(1 / 0.25 + 0.5 * 4 / 4)
    with pytest.raises(ValueError):
        data_norms(FrequencyField(xi, w, [[1.0], [2.0]], "modes"), 1)


def test_besov_scaling_with_dilation(rng):
    # dilating xi by s scales besov_half per sample by s (1/2 derivative squared)
    xi = rng.normal(size=(5, 2))
    phi = rng.normal(size=(5, 2))
    base = data_norms(FrequencyField(xi, np.ones(5), phi, "trace"), 2)
    s = 3.0
    scaled_phi = phi * np.array([1.0, s])  # order-1 trace component scales with the frequency
    dil = data_norms(FrequencyField(s * xi, np.ones(5), scaled_phi, "trace"), 2)
    assert dil["whitney_L2"] == pytest.approx(s**2 * base["whitney_L2"], rel=1e-12)
    assert dil["besov_half"] == pytest.approx(s**3 * base["besov_half"], rel=1e-12)


def test_sup_time_grid():
    g = sup_time_grid([0.1, 10.0])
    assert g[0] == 0.0
    assert g[1] == pytest.approx(1e-4) and g[-1] == pytest.approx(1e4)
    assert len(g) == 1 + int(np.ceil(64 * 8)) + 1


def test_solution_norms_laplacian_single_frequency():
    c = 1.0
    sol = solve_neumann(make_special_operator(1, 1), FrequencyField([unit_xi(1)], [2.0], [[c]]))
    out = solution_norms(sol)
    assert out["square_function"] == pytest.approx(2 * 0.5)
    assert out["sup_L2"] == pytest.approx(2 * 2.0)


def test_norm_report_roundtrip(rng):
    xi, w = frequency_grid(2, 0.05, 4.0, radial=4, angular=4)
    G = rng.normal(size=(len(w), 2))
    rep = norm_report(solve_neumann(make_biharmonic_rho(2, 0.0), FrequencyField(xi, w, G)))
    js = rep.to_json()
    assert js["proxy_fields"] == ["neumann_L2_weighted", "neumann_Wminus1_weighted"]
    back = NormReport.from_json(json.loads(json.dumps(js)))
    assert back == rep
    assert all(v > 0 for k, v in js.items() if k != "proxy_fields")
