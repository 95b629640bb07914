import math

import numpy as np
import pytest

from helmholtz.basis import (
    BasisError,
    build_basis,
    gll_rule,
    interior_eigendecomposition,
    padded,
    transformed_matrices,
)


def test_gll_low_degree() -> None:
    """GLL rules for p=1 and p=2"""

    nodes, weights = gll_rule(1)
    assert np.allclose(nodes, [-1.0, 1.0])
    assert np.allclose(weights, [1.0, 1.0])

    nodes, weights = gll_rule(2)
    assert np.allclose(nodes, [-1.0, 0.0, 1.0], atol=1e-15)
    assert np.allclose(weights, [1 / 3, 4 / 3, 1 / 3], rtol=1e-14)


def test_gll_invalid_degree() -> None:
    """p=0 has no GLL rule"""

    with pytest.raises(BasisError):
        gll_rule(0)


@pytest.mark.parametrize("p", [2, 5, 16, 32])
def test_gll_nodes_and_weights(p: int) -> None:
    """Nodes increase, are antisymmetric and the weights sum to 2"""

    nodes, weights = gll_rule(p)

    assert nodes[0] == -1.0
    assert nodes[-1] == 1.0
    assert np.all(np.diff(nodes) > 0)
    assert np.allclose(nodes, -nodes[::-1], atol=1e-14)
    assert np.all(weights > 0)
    assert abs(weights.sum() - 2.0) < 1e-13


@pytest.mark.parametrize("p", [2, 3, 7, 12])
def test_gll_quadrature_exactness(p: int) -> None:
    """Random polynomials of degree 2p-1 are integrated exactly"""

    rng = np.random.default_rng(p)
    nodes, weights = gll_rule(p)

    for _ in range(5):
        poly = np.polynomial.Polynomial(rng.standard_normal(2 * p))
        antiderivative = poly.integ()
        exact = antiderivative(1.0) - antiderivative(-1.0)
        assert weights @ poly(nodes) == pytest.approx(exact, rel=1e-12, abs=1e-12)


def test_stiffness_examples() -> None:
    """K for p=1 and the interior entry for p=2"""

    basis = build_basis(1)
    assert np.allclose(basis.K, [[0.5, -0.5], [-0.5, 0.5]], atol=1e-15)

    basis = build_basis(2)
    assert basis.K_II[0, 0] == pytest.approx(8 / 3, rel=1e-14)


@pytest.mark.parametrize("p", [1, 2, 4, 9, 16])
def test_basis_invariants(p: int) -> None:
    """K is symmetric, annihilates constants and M holds the weights"""

    basis = build_basis(p)

    assert basis.n == p + 1
    assert np.allclose(basis.K, basis.K.T, atol=1e-12)
    assert np.max(np.abs(basis.K @ np.ones(p + 1))) < 1e-12 * max(1, p**2)
    assert np.array_equal(basis.M, basis.weights)
    assert np.max(np.abs(basis.Dmat @ np.ones(p + 1))) < 1e-10


def test_differentiation_matrix_is_exact() -> None:
    """Dmat differentiates polynomials of degree p exactly at the nodes"""

    basis = build_basis(6)
    poly = np.polynomial.Polynomial([1.0, -2.0, 0.5, 3.0, 0.0, 1.0, -0.25])

    assert np.allclose(basis.Dmat @ poly(basis.nodes), poly.deriv()(basis.nodes), atol=1e-10)


def test_eigen_p2() -> None:
    """p=2 gives lambda=2 and S_II=sqrt(3)/2"""

    eig = interior_eigendecomposition(build_basis(2))

    assert eig.lam == pytest.approx([2.0], rel=1e-14)
    assert eig.S_II[0, 0] == pytest.approx(math.sqrt(3) / 2, rel=1e-14)


def test_eigen_needs_interior() -> None:
    """p=1 has no interior nodes"""

    with pytest.raises(BasisError):
        interior_eigendecomposition(build_basis(1))


@pytest.mark.parametrize("p", [2, 3, 8, 16, 32])
def test_eigen_invariants(p: int) -> None:
    """S M S^T = I, S K S^T = diag(lam), lam ascending and positive"""

    basis = build_basis(p)
    eig = interior_eigendecomposition(basis)
    S = eig.S_II

    scale = max(1.0, float(eig.lam.max()))

    assert np.allclose(S @ np.diag(basis.M_II) @ S.T, np.eye(p - 1), atol=1e-11)
    assert np.allclose(S @ basis.K_II @ S.T, np.diag(eig.lam), atol=1e-11 * scale)
    assert np.all(eig.lam > 0)
    assert np.all(np.diff(eig.lam) >= 0)


def test_eigen_inverse_and_reconstruction() -> None:
    """S^-1 = M_II S^T and K_II = S^-1 diag(lam) S^-T"""

    basis = build_basis(8)
    eig = interior_eigendecomposition(basis)
    S_inv = eig.inverse(basis)

    assert np.allclose(S_inv @ eig.S_II, np.eye(7), atol=1e-11)
    assert np.allclose(S_inv @ np.diag(eig.lam) @ S_inv.T, basis.K_II, atol=1e-10)


@pytest.mark.parametrize("p", [2, 3, 6, 12])
def test_transformed_matrices(p: int) -> None:
    """Mt and Kt equal the padded S sandwich of M and K"""

    basis = build_basis(p)
    eig = interior_eigendecomposition(basis)
    transformed = transformed_matrices(basis, eig)
    S = padded(eig.S_II)

    scale = float(np.abs(basis.K).max())

    assert np.array_equal(transformed.Mt[1:-1], np.ones(p - 1))
    assert np.allclose(np.diag(transformed.Mt), S @ np.diag(basis.M) @ S.T, atol=1e-11)
    assert np.allclose(transformed.Kt, S @ basis.K @ S.T, atol=1e-11 * scale)
    assert np.array_equal(np.diag(transformed.Kt)[1:-1], eig.lam)
    assert transformed.Kt[0, 0] == basis.K[0, 0]
    assert transformed.Kt[-1, 0] == basis.K[-1, 0]
    assert np.array_equal(transformed.Kt_diagonal, np.diag(transformed.Kt))

    # Arrowhead: no coupling between distinct interior modes
    interior = transformed.Kt[1:-1, 1:-1]
    assert np.count_nonzero(interior - np.diag(np.diag(interior))) == 0


def test_transformed_p2() -> None:
    """p=2 interior entry of Kt is the eigenvalue 2"""

    basis = build_basis(2)
    transformed = transformed_matrices(basis, interior_eigendecomposition(basis))

    assert transformed.Kt[1, 1] == pytest.approx(2.0, rel=1e-14)


def test_transformed_inconsistent_degree() -> None:
    """Eigendecomposition of another degree is rejected"""

    with pytest.raises(BasisError):
        transformed_matrices(build_basis(4), interior_eigendecomposition(build_basis(3)))
