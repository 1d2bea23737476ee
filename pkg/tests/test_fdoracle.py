import numpy as np
import pytest

from neumannlab.fdoracle import fd_bvp, stencil_weights
from neumannlab.halfspace import dirichlet_map, neumann_map
from neumannlab.operators import make_biharmonic_rho, make_special_operator
from neumannlab.symbol import mode_basis, reduce


def test_stencil_weights_classic():
    assert np.allclose(stencil_weights([-1, 0, 1], 1), [-0.5, 0, 0.5])
    assert np.allclose(stencil_weights([-1, 0, 1], 2), [1, -2, 1])
    w = stencil_weights(np.arange(5), 1)
    x = np.arange(5) * 0.1
    assert w @ np.sin(x) / 0.1 == pytest.approx(1.0, abs=1e-4)


@pytest.mark.parametrize(
    "A, xi",
    [
        (make_special_operator(1, 1), [0.3]),
        (make_special_operator(1, 2), [0.2]),
        (make_biharmonic_rho(1, 0.25), [0.16]),
    ],
)
@pytest.mark.parametrize("problem", ["neumann", "dirichlet"])
def test_fd_matches_mode_solution(A, xi, problem, rng):
    sym = reduce(A, xi)
    basis = mode_basis(sym)
    data = rng.normal(size=A.m) + 1j * rng.normal(size=A.m)
    M = neumann_map(sym, basis) if problem == "neumann" else dirichlet_map(basis)
    f = np.linalg.solve(M, data)
    exact_tr = dirichlet_map(basis) @ f
    exact_ne = neumann_map(sym, basis) @ f
    out = fd_bvp(sym, data, problem, npts=2048)
    assert np.allclose(out["traces"], exact_tr, rtol=1e-4, atol=1e-4 * np.abs(exact_tr).max())
    assert np.allclose(out["neumann"], exact_ne, rtol=1e-4, atol=1e-4 * np.abs(exact_ne).max())
    w = basis.combination(f)(out["t"][:50])
    assert np.allclose(out["w"][:50], w, atol=1e-4 * np.abs(w).max())


def test_fd_rejects_bad_problem():
    with pytest.raises(ValueError):
        fd_bvp(reduce(make_special_operator(1, 1), [0.3]), [1.0], "robin")
