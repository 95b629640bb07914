#!/usr/bin/env python

"""
Condensed element operators H^ = H_BB - H_BI H_II^-1 H_IB

Three evaluation variants share one interface:

- mmc: one dense boundary x boundary matrix per distinct element geometry
- tpc: tensor-product factorization through the interior eigenspace
- tpt: tensor-product factorization in the transformed system, where the
  interior block is diagonal and every face suboperator is a single vector

Every variant splits its action into a primary part (H_BB) and a condensed
part (H_BI H_II^-1 H_IB) so their multiplication counts can be measured
separately; apply() returns primary minus condensed.
"""

import logging
from abc import ABC, abstractmethod
from typing import List, Optional

import numpy as np
import numpy.typing as npt

from . import operators
from .basis import Basis1D, InteriorEigen, TransformedBasis1D
from .helpers import HelmholtzError
from .mesh import MetricCoefficients, classify_dofs, distinct_geometries, face_index
from .operators import FaceSuboperator, FullElementOperator
from .tensor import Field3, contract_axis, kron2_apply, record

logger = logging.getLogger(__name__)

Array = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]

# Size of one batch of unit vectors during the mmc precomputation
MMC_CHUNK_BYTES = 2**26


class MemoryCapExceeded(HelmholtzError):
    pass


class CondensedOperator(ABC):
    """Condensed operator of a batch of elements"""

    variant: str = ""

    # Operates on values of the transformed system
    transformed: bool = False

    def __init__(self, op: FullElementOperator, eig: InteriorEigen) -> None:
        self.basis: Basis1D = op.basis
        self.eig = eig
        self.d: MetricCoefficients = np.atleast_2d(np.asarray(op.d, dtype=np.float64))
        self.op = FullElementOperator(basis=op.basis, d=self.d)

    @property
    def p(self) -> int:
        return self.basis.p

    @property
    def n_elements(self) -> int:
        return int(self.d.shape[0])

    @abstractmethod
    def apply_primary(self, u: Field3) -> Field3:
        """H_BB u on element boundary values"""

    @abstractmethod
    def apply_condensed(self, u: Field3) -> Field3:
        """H_BI H_II^-1 H_IB u on element boundary values"""

    @abstractmethod
    def diagonal(self) -> Field3:
        """Diagonal of the element condensed operators as boundary values"""

    def apply(self, u: Field3) -> Field3:
        return self.apply_primary(u) - self.apply_condensed(u)

    def condense_rhs(self, F: Field3) -> Field3:
        """F_B - H_BI H_II^-1 F_I"""
        return operators.condense_rhs(self.op, self.eig, F)

    def recover_interior(self, F_I: Field3, u_B: Field3) -> Field3:
        """u_I = H_II^-1 (F_I - H_IB u_B)"""
        return operators.recover_interior(self.op, self.eig, F_I, u_B)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(p={self.p}, n_elements={self.n_elements})"


def condensed_diagonal(
    M: Array,
    K_diagonal: Array,
    Dinv: Field3,
    d: MetricCoefficients,
    suboperators: List[FaceSuboperator],
) -> Field3:
    """
    Diagonal of primary minus condensed part in O(n_I^3) per geometry

    The condensed part only touches faces. The diagonal entry of a face node
    is d_a^2 sum_j H_EF[j, i]^2 D^-1[j], a tensor contraction with the
    squared 1-D factors.
    """

    d = np.asarray(d)
    diagonal = operators.primary_diagonal(M, K_diagonal, d)

    for sub in suboperators:
        squared = None if sub.tangent is None else (sub.tangent**2).T
        contracted = kron2_apply(squared, squared, contract_axis(Dinv, sub.normal**2, sub.axis))
        diagonal[face_index(sub.axis, sub.side)] -= d[..., sub.axis, None, None] ** 2 * contracted

    return operators.boundary_only(diagonal)


class CondensedOperatorTPC(CondensedOperator):
    """Factorized condensed operator through the interior eigenspace"""

    variant = "tpc"

    def __init__(self, op: FullElementOperator, eig: InteriorEigen) -> None:
        super().__init__(op, eig)

        self.suboperators = operators.face_suboperators(self.basis, eig)
        self.Dinv = 1.0 / operators.eigenspace_diagonal(eig, self.d)
        self._line_apply = operators.dense_line_apply(self.basis.K)
        self._corner = self.basis.K[:: self.p, :: self.p]

    def apply_primary(self, u: Field3) -> Field3:
        return operators.apply_boundary_lines(
            u, self.d, self.basis.M, self._line_apply, self._corner
        )

    def apply_condensed(self, u: Field3) -> Field3:
        v = operators.lift_faces(u, self.d, self.suboperators) * self.Dinv
        record(v.size)
        return operators.restrict_faces(v, self.d, self.suboperators)

    def condense_rhs(self, F: Field3) -> Field3:
        w = operators.interior_inverse_apply(
            self.eig, self.d, operators.interior(F), Dinv=self.Dinv
        )
        lifted = np.zeros(w.shape[:-3] + F.shape[-3:])
        lifted[..., 1:-1, 1:-1, 1:-1] = w
        return operators.boundary_only(F - operators.apply_full(self.op, lifted))

    def recover_interior(self, F_I: Field3, u_B: Field3) -> Field3:
        r = F_I - operators.interior(operators.apply_full(self.op, operators.boundary_only(u_B)))
        return operators.interior_inverse_apply(self.eig, self.d, r, Dinv=self.Dinv)

    def diagonal(self) -> Field3:
        unique, inverse = distinct_geometries(self.d)
        Dinv = 1.0 / operators.eigenspace_diagonal(self.eig, unique)
        diagonal = condensed_diagonal(
            self.basis.M, np.diag(self.basis.K), Dinv, unique, self.suboperators
        )
        return diagonal[inverse]


class CondensedOperatorTPT(CondensedOperator):
    """
    Factorized condensed operator in the transformed system

    Inputs and outputs are transformed boundary values. The interior block
    is the diagonal D, the face suboperators are single vectors K~_I,side
    and face self-couplings are diagonal.
    """

    variant = "tpt"
    transformed = True

    def __init__(
        self, op: FullElementOperator, transformed: TransformedBasis1D, eig: InteriorEigen
    ) -> None:
        super().__init__(op, eig)

        self.transformed_basis = transformed
        self.suboperators = operators.face_suboperators(self.basis, eig, transformed)
        self.Dinv = 1.0 / operators.eigenspace_diagonal(eig, self.d)
        self._line_apply = operators.arrowhead_line_apply(transformed)
        self._corner = transformed.Kt[:: self.p, :: self.p]

    def apply_primary(self, u: Field3) -> Field3:
        return operators.apply_boundary_lines(
            u, self.d, self.transformed_basis.Mt, self._line_apply, self._corner
        )

    def apply_condensed(self, u: Field3) -> Field3:
        v = operators.lift_faces(u, self.d, self.suboperators) * self.Dinv
        record(v.size)
        return operators.restrict_faces(v, self.d, self.suboperators)

    def condense_rhs(self, F: Field3) -> Field3:
        """F~_B - H~_BI D^-1 F~_I for transformed element right-hand sides"""
        v = operators.interior(F) * self.Dinv
        record(v.size)
        return operators.boundary_only(F) - operators.restrict_faces(
            v, self.d, self.suboperators
        )

    def recover_interior(self, F_I: Field3, u_B: Field3) -> Field3:
        """u~_I = D^-1 (F~_I - H~_IB u~_B)"""
        v = (F_I - operators.lift_faces(u_B, self.d, self.suboperators)) * self.Dinv
        record(v.size)
        return v

    def diagonal(self) -> Field3:
        unique, inverse = distinct_geometries(self.d)
        Dinv = 1.0 / operators.eigenspace_diagonal(self.eig, unique)
        diagonal = condensed_diagonal(
            self.transformed_basis.Mt,
            self.transformed_basis.Kt_diagonal,
            Dinv,
            unique,
            self.suboperators,
        )
        return diagonal[inverse]


class CondensedOperatorMMC(CondensedOperator):
    """
    Dense condensed operator, one matrix per distinct element geometry

    Rows and columns follow `order`: the face nodes (w, e, s, n, b, t) first,
    then edges and vertices. The face-face block is reported as the condensed
    part and enters apply_condensed with a negative sign, all other entries
    form the primary part.
    """

    variant = "mmc"

    def __init__(
        self,
        op: FullElementOperator,
        eig: InteriorEigen,
        matrices: Array,
        geometry: IntArray,
    ) -> None:
        super().__init__(op, eig)

        classes = classify_dofs(self.p)
        faces = classes.face_nodes
        rest = np.setdiff1d(classes.boundary, faces)

        self.order: IntArray = np.concatenate([faces, rest])
        self.n_faces = len(faces)
        self.matrices = matrices
        self.geometry = geometry
        self._members = [np.flatnonzero(geometry == g) for g in range(len(matrices))]

    @property
    def nbytes(self) -> int:
        return int(self.matrices.nbytes)

    def _values(self, u: Field3) -> Array:
        return u.reshape(u.shape[0], -1)[:, self.order]

    def _fields(self, y: Array) -> Field3:
        n = self.basis.n
        out = np.zeros((y.shape[0], n**3))
        out[:, self.order] = y
        return out.reshape(-1, n, n, n)

    def apply(self, u: Field3) -> Field3:
        x = self._values(u)
        y = np.empty_like(x)

        for members, A in zip(self._members, self.matrices):
            y[members] = x[members] @ A.T
            record(A.size * len(members))

        return self._fields(y)

    def apply_primary(self, u: Field3) -> Field3:
        x = self._values(u)
        y = np.zeros_like(x)
        nf = self.n_faces

        for members, A in zip(self._members, self.matrices):
            xm = x[members]
            y[members] = xm[:, nf:] @ A[:, nf:].T
            y[members, nf:] += xm[:, :nf] @ A[nf:, :nf].T
            record((A.size - nf * nf) * len(members))

        return self._fields(y)

    def apply_condensed(self, u: Field3) -> Field3:
        x = self._values(u)
        y = np.zeros_like(x)
        nf = self.n_faces

        for members, A in zip(self._members, self.matrices):
            y[members, :nf] = -(x[members, :nf] @ A[:nf, :nf].T)
            record(nf * nf * len(members))

        return self._fields(y)

    def diagonal(self) -> Field3:
        diagonal = np.diagonal(self.matrices, axis1=1, axis2=2)[self.geometry]
        return self._fields(diagonal)


def precompute_tpc(op: FullElementOperator, eig: InteriorEigen) -> CondensedOperatorTPC:
    return CondensedOperatorTPC(op, eig)


def apply_tpc(tpc: CondensedOperatorTPC, u: Field3) -> Field3:
    return tpc.apply(u)


def precompute_tpt(
    op: FullElementOperator, transformed: TransformedBasis1D, eig: InteriorEigen
) -> CondensedOperatorTPT:
    return CondensedOperatorTPT(op, transformed, eig)


def apply_tpt(tpt: CondensedOperatorTPT, u: Field3) -> Field3:
    return tpt.apply(u)


def precompute_mmc(
    op: FullElementOperator, eig: InteriorEigen, mem_cap: Optional[int] = None
) -> CondensedOperatorMMC:
    """
    Build the dense condensed matrices, once per distinct geometry

    Columns are obtained by applying the factorized operator to batches of
    boundary unit vectors, O(n_I^5) per geometry. Raises MemoryCapExceeded
    if the matrices would need more than mem_cap bytes.
    """

    d = np.atleast_2d(np.asarray(op.d, dtype=np.float64))
    unique, geometry = distinct_geometries(d)

    classes = classify_dofs(op.basis.p)
    n = op.basis.n
    n_boundary = classes.n_boundary
    required = len(unique) * n_boundary**2 * 8

    if mem_cap is not None and required > mem_cap:
        raise MemoryCapExceeded(
            f"mmc matrices need {required} bytes for {len(unique)} geometries, "
            f"cap is {mem_cap} bytes"
        )

    faces = classes.face_nodes
    order = np.concatenate([faces, np.setdiff1d(classes.boundary, faces)])
    chunk = max(1, MMC_CHUNK_BYTES // (8 * n**3 * 4))

    matrices = np.empty((len(unique), n_boundary, n_boundary))

    for g, row in enumerate(unique):
        tpc = CondensedOperatorTPC(FullElementOperator(basis=op.basis, d=row[None, :]), eig)

        for start in range(0, n_boundary, chunk):
            columns = order[start : start + chunk]
            units = np.zeros((len(columns), n**3))
            units[np.arange(len(columns)), columns] = 1.0

            result = tpc.apply(units.reshape(-1, n, n, n)).reshape(len(columns), -1)
            matrices[g][:, start : start + len(columns)] = result[:, order].T

    logger.debug(
        "precomputed %d mmc matrices of size %d (%d bytes)",
        len(unique),
        n_boundary,
        matrices.nbytes,
    )

    return CondensedOperatorMMC(op, eig, matrices, geometry)


def apply_mmc(mmc: CondensedOperatorMMC, u: Field3) -> Field3:
    return mmc.apply(u)
