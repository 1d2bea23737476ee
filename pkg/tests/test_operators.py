import numpy as np
import pytest

from neumannlab.multiindex import enumerate_multiindices
from neumannlab.operators import (
    CoefTensor,
    check_self_adjoint,
    make_biharmonic_rho,
    make_special_operator,
    reduced_matrices,
    slice_ellipticity,
    sphere_directions,
)


def full_form(A, xi, tau):
    """Quadratic form on the gradient array (2 pi i (xi, tau))^alpha, by direct summation."""
    z = 2j * np.pi * np.append(np.asarray(xi, float), tau)
    arr = np.array([np.prod(z ** np.asarray(a)) for a in enumerate_multiindices(A.n + 1, A.m)])
    return np.vdot(arr, A.entries @ arr)


def test_special_examples():
    A = make_special_operator(2, 2)
    assert A.entry((1, 1, 0), (1, 1, 0)) == 2
    assert A.entry((0, 0, 2), (0, 0, 2)) == 1
    assert np.allclose(make_special_operator(1, 1).entries, np.eye(2))
    assert check_self_adjoint(A)
    assert np.all(np.isreal(A.entries))


def test_biharmonic_n1_entries():
    rho = 0.37
    A = make_biharmonic_rho(1, rho)
    expected = np.array([[1, 0, rho], [0, 2 * (1 - rho), 0], [rho, 0, 1]])
    assert np.allclose(A.entries, expected)
    assert make_biharmonic_rho(1, 1.0).entry((1, 1), (1, 1)) == 0


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("rho", [-3.0, 0.0, 0.4, 1.0])
def test_biharmonic_form_is_rho_independent(n, rho, rng):
    A = make_biharmonic_rho(n, rho)
    assert check_self_adjoint(A)
    for _ in range(5):
        xi, tau = rng.normal(size=n), rng.normal()
        expected = (4 * np.pi**2 * (xi @ xi + tau**2)) ** 2
        assert full_form(A, xi, tau) == pytest.approx(expected, rel=1e-12)


def test_biharmonic_form_on_hessians(rng):
    # rho <Lap psi, Lap phi> + (1 - rho) sum_jk <d_jk psi, d_jk phi> on random symmetric Hessians
    rho = -0.6
    A = make_biharmonic_rho(2, rho)
    idx = enumerate_multiindices(3, 2)
    for _ in range(5):
        H1 = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        H1 = H1 + H1.T
        H2 = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        H2 = H2 + H2.T

        def arr(H):
            out = []
            for a in idx:
                j = [k for k in range(3) for _ in range(a[k])]
                out.append(H[j[0], j[1]])
            return np.array(out)

        lhs = np.vdot(arr(H1), A.entries @ arr(H2))
        rhs = rho * np.conj(np.trace(H1)) * np.trace(H2) + (1 - rho) * np.sum(np.conj(H1) * H2)
        assert lhs == pytest.approx(rhs, rel=1e-12)


def test_check_self_adjoint_detects_perturbation():
    A = make_special_operator(1, 2)
    E = A.entries.copy()
    E[0, 2] = 1j
    assert not check_self_adjoint(CoefTensor(1, 2, E), 1e-12)
    with pytest.raises(ValueError):
        check_self_adjoint(A, -1.0)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_special_slice_constant_is_one(n, m):
    rep = slice_ellipticity(make_special_operator(n, m), 24)
    assert rep.lambda_slice == pytest.approx(1.0, abs=1e-12)
    assert rep.lambda_slice <= rep.lambda_garding + 1e-12
    assert rep.is_self_adjoint
    assert rep.sample_count >= 2 * n


@pytest.mark.parametrize("rho", [-1.5, -0.5, 0.0, 0.3, 0.9, 1.0, 1.5])
def test_biharmonic_slice_curve(rho):
    rep = slice_ellipticity(make_biharmonic_rho(1, rho), 4)
    assert rep.lambda_slice == pytest.approx(min(1 - rho, 1 + rho, 2 - 2 * rho), abs=1e-12)
    assert rep.lambda_slice <= rep.lambda_garding + 1e-12


def test_biharmonic_generalized_eigenvalues_n1():
    rho = 0.25
    C, omega = reduced_matrices(make_biharmonic_rho(1, rho), [1 / (2 * np.pi)])
    ev = np.sort(np.linalg.eigvalsh(np.diag(omega ** -0.5) @ C @ np.diag(omega ** -0.5)))
    assert np.allclose(ev, np.sort([1 - rho, 1 + rho, 2 * (1 - rho)]))


def test_special_reduced_matrix_is_diagonal(rng):
    for n, m in [(1, 3), (2, 2), (3, 4)]:
        xi = rng.normal(size=n)
        C, omega = reduced_matrices(make_special_operator(n, m), xi)
        c2 = (2 * np.pi) ** 2 * (xi @ xi)
        assert np.allclose(C, np.diag(c2 ** (m - np.arange(m + 1))), rtol=1e-12)
        assert omega[-1] == 1


def test_slice_invariance_under_reflection_and_scaling(rng):
    A = CoefTensor(2, 2, make_special_operator(2, 2).entries + 0.1 * rng.normal(size=(6, 6)))
    from neumannlab.operators import _slice_min

    xi = rng.normal(size=2)
    base = _slice_min(A, xi)
    assert _slice_min(A, -xi) == pytest.approx(base, rel=1e-10)
    assert _slice_min(A, 3.7 * xi) == pytest.approx(base, rel=1e-10)


def test_sphere_directions_include_axes():
    d = sphere_directions(3, 10)
    assert np.allclose(np.linalg.norm(d, axis=1), 1)
    for k in range(3):
        e = np.eye(3)[k]
        assert np.any(np.all(np.isclose(d, e), axis=1))
        assert np.any(np.all(np.isclose(d, -e), axis=1))
    assert np.array_equal(d, sphere_directions(3, 10))


def test_tensor_json_roundtrip_and_adjoint(rng):
    E = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    A = CoefTensor(1, 2, E)
    B = CoefTensor.from_json(A.to_json())
    assert np.array_equal(A.entries, B.entries)
    assert np.array_equal(A.adjoint().entries, E.conj().T)
    assert A.Lambda == pytest.approx(np.abs(E).max())
    with pytest.raises(ValueError):
        CoefTensor(1, 2, np.eye(2))
