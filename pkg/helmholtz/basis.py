#!/usr/bin/env python

"""
One-dimensional discrete objects of the spectral-element method

GLL quadrature, the Lagrange nodal basis on the GLL points (diagonal mass,
dense stiffness, derivative matrix), the generalized eigendecomposition of the
interior blocks and the matrices of the transformed system.

All objects are immutable after construction and may be shared read-only
between element loops.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import numpy.typing as npt
import scipy.linalg

from .helpers import HelmholtzError

logger = logging.getLogger(__name__)

Array = npt.NDArray[np.float64]

NEWTON_TOLERANCE = 1e-15

NEWTON_MAX_ITERATIONS = 100


class BasisError(HelmholtzError):
    pass


@dataclass(frozen=True)
class Basis1D:
    """
    Lagrange basis on the p+1 GLL points of [-1, 1]

    M holds the diagonal of the GLL-lumped mass matrix, K the dense stiffness
    matrix and Dmat the nodal differentiation matrix, Dmat[i, j] = phi_j'(x_i).
    """

    p: int
    nodes: Array
    weights: Array
    M: Array
    K: Array
    Dmat: Array

    @property
    def n(self) -> int:
        return self.p + 1

    @property
    def n_interior(self) -> int:
        return self.p - 1

    @property
    def M_II(self) -> Array:
        return self.M[1:-1]

    @property
    def K_II(self) -> Array:
        return self.K[1:-1, 1:-1]


@dataclass(frozen=True)
class InteriorEigen:
    """
    Solution of the generalized eigenproblem of the interior blocks

    S_II @ diag(M_II) @ S_II.T == I and S_II @ K_II @ S_II.T == diag(lam)
    """

    S_II: Array
    lam: Array

    def inverse(self, basis: Basis1D) -> Array:
        """S_II^-1 = M_II S_II^T"""
        return basis.M_II[:, None] * self.S_II.T


@dataclass(frozen=True)
class TransformedBasis1D:
    """
    Mass and stiffness in the transformed system

    Mt is diagonal (M_00, 1, ..., 1, M_pp) and stored as a vector. Kt is an
    arrowhead matrix: dense first/last rows and columns, interior diag(lam).
    """

    Mt: Array
    Kt: Array
    lam: Array

    @property
    def Kt_diagonal(self) -> Array:
        return np.concatenate(([self.Kt[0, 0]], self.lam, [self.Kt[-1, -1]]))


def gll_rule(p: int) -> Tuple[Array, Array]:
    """
    Return the p+1 Gauss-Lobatto-Legendre nodes and weights on [-1, 1]

    The nodes are the roots of (1 - x^2) L_p'(x). Newton iteration on the
    Legendre recursion, starting from the Chebyshev-Gauss-Lobatto points.
    """

    if p < 1:
        raise BasisError(f"polynomial degree must be at least 1, got {p}")

    n = p + 1
    x = -np.cos(np.pi * np.arange(n) / p)

    # Legendre Vandermonde matrix, P[:, k] = L_k(x)
    P = np.zeros((n, n))

    for _ in range(NEWTON_MAX_ITERATIONS):
        x_old = x

        P[:, 0] = 1.0
        P[:, 1] = x
        for k in range(2, n):
            P[:, k] = ((2 * k - 1) * x * P[:, k - 1] - (k - 1) * P[:, k - 2]) / k

        x = x_old - (x * P[:, p] - P[:, p - 1]) / (n * P[:, p])

        if np.max(np.abs(x - x_old)) < NEWTON_TOLERANCE:
            break

    # Exact endpoints and symmetry about zero
    x = 0.5 * (x - x[::-1])
    x[0], x[-1] = -1.0, 1.0

    P[:, 0] = 1.0
    P[:, 1] = x
    for k in range(2, n):
        P[:, k] = ((2 * k - 1) * x * P[:, k - 1] - (k - 1) * P[:, k - 2]) / k

    weights = 2.0 / (p * n * P[:, p] ** 2)
    weights = 0.5 * (weights + weights[::-1])

    return x, weights


def differentiation_matrix(nodes: Array) -> Array:
    """
    Nodal differentiation matrix of the Lagrange basis on the given nodes

    Barycentric form with the negative-sum diagonal, so every row annihilates
    constants exactly.
    """

    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)

    bary = 1.0 / np.prod(diff, axis=1)

    D = (bary[None, :] / bary[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))

    return D


def build_basis(p: int) -> Basis1D:
    """Build the GLL nodal basis of degree p with K = Dmat^T M Dmat"""

    nodes, weights = gll_rule(p)
    Dmat = differentiation_matrix(nodes)

    K = Dmat.T @ (weights[:, None] * Dmat)
    K = 0.5 * (K + K.T)

    logger.debug("built GLL basis p=%d", p)

    return Basis1D(p=p, nodes=nodes, weights=weights, M=weights.copy(), K=K, Dmat=Dmat)


def interior_eigendecomposition(basis: Basis1D) -> InteriorEigen:
    """
    Solve K_II s = lam M_II s via the symmetrized standard problem

    With W = M_II^(-1/2), W K_II W = Q diag(lam) Q^T and S_II = Q^T W.
    Eigenvalues ascend; each eigenvector is signed so that its largest
    magnitude entry is positive.
    """

    if basis.p < 2:
        raise BasisError(f"no interior nodes for p={basis.p}")

    M_II = basis.M_II
    if np.any(M_II <= 0.0):
        raise BasisError(f"non-positive interior mass entries for p={basis.p}")

    W = 1.0 / np.sqrt(M_II)
    A = W[:, None] * basis.K_II * W[None, :]

    lam, Q = scipy.linalg.eigh(0.5 * (A + A.T))

    pivot = np.argmax(np.abs(Q), axis=0)
    signs = np.sign(Q[pivot, np.arange(Q.shape[1])])
    Q = Q * signs[None, :]

    S_II = Q.T * W[None, :]

    if np.any(lam <= 0.0):
        raise BasisError(f"non-positive interior eigenvalue for p={basis.p}")

    logger.debug("interior eigendecomposition p=%d, lam in [%g, %g]", basis.p, lam[0], lam[-1])

    return InteriorEigen(S_II=S_II, lam=lam)


def padded(S_II: Array) -> Array:
    """Embed an interior matrix into the identity of size n_I + 2"""

    n = S_II.shape[0] + 2
    S = np.eye(n)
    S[1:-1, 1:-1] = S_II
    return S


def transformed_matrices(basis: Basis1D, eig: InteriorEigen) -> TransformedBasis1D:
    """Mass and stiffness in the system transformed by the padded S"""

    if eig.S_II.shape[0] != basis.n_interior:
        raise BasisError(
            f"eigendecomposition of size {eig.S_II.shape[0]} does not match p={basis.p}"
        )

    S = padded(eig.S_II)

    Mt = np.ones(basis.n)
    Mt[0] = basis.M[0]
    Mt[-1] = basis.M[-1]

    Kt = S @ basis.K @ S.T
    Kt[1:-1, 1:-1] = np.diag(eig.lam)
    Kt[0, 0], Kt[0, -1] = basis.K[0, 0], basis.K[0, -1]
    Kt[-1, 0], Kt[-1, -1] = basis.K[-1, 0], basis.K[-1, -1]

    return TransformedBasis1D(Mt=Mt, Kt=Kt, lam=eig.lam.copy())
