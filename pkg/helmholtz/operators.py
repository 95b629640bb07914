#!/usr/bin/env python

"""
Element Helmholtz operator and the building blocks of static condensation

    H = d0 (M x M x M) + d1 (M x M x K) + d2 (M x K x M) + d3 (K x M x M)

Element boundary values are full (p+1)^3 element fields whose interior
entries are ignored on input and zero on output. Interior fields have shape
(..., n_I, n_I, n_I). The interior inverse uses fast diagonalization with
S_II M_II S_II^T = I:

    H_II^-1 = (S x S x S)^T D^-1 (S x S x S)

The element-boundary coupling H_IB only involves faces (M is diagonal), so
the condensed part is a sum over the six faces of lift (H_EF), a pointwise
D^-1 and restriction (H_FE).
"""

import logging
from dataclasses import dataclass
from typing import Callable, Iterator, List, Optional, Tuple

import numpy as np
import numpy.typing as npt
import scipy.linalg

from .basis import Basis1D, InteriorEigen, TransformedBasis1D, padded
from .helpers import HelmholtzError
from .mesh import FACES, MetricCoefficients, classify_dofs, face_index
from .tensor import (
    Field3,
    apply_axis,
    contract_axis,
    diag3_build,
    expand_axis,
    kron2_apply,
    kron3_apply,
    record,
)

logger = logging.getLogger(__name__)

Array = npt.NDArray[np.float64]

# Largest degree accepted by the dense oracles
ORACLE_MAX_P = 8


class OperatorError(HelmholtzError):
    pass


@dataclass(frozen=True)
class FullElementOperator:
    """Element operator of one or more elements, d of shape (4,) or (n_e, 4)"""

    basis: Basis1D
    d: MetricCoefficients

    def coefficient(self, k: int) -> Array:
        return np.asarray(self.d)[..., k, None, None, None]


def _check_field(basis: Basis1D, u: Field3) -> None:
    n = basis.n
    if u.shape[-3:] != (n, n, n):
        raise OperatorError(f"expected element fields of size {n}^3, got shape {u.shape}")


def apply_full(op: FullElementOperator, u: Field3) -> Field3:
    """Apply H by sum factorization, the mass term as a pointwise diagonal"""

    basis = op.basis
    _check_field(basis, u)

    M, K = basis.M, basis.K
    MM = M[:, None] * M[None, :]
    mass = M[:, None, None] * MM[None, :, :]

    out = (
        op.coefficient(0) * mass * u
        + op.coefficient(1) * MM[:, :, None] * apply_axis(K, 1, u)
        + op.coefficient(2) * MM[:, None, :] * apply_axis(K, 2, u)
        + op.coefficient(3) * MM[None, :, :] * apply_axis(K, 3, u)
    )
    record(8 * out.size)

    return out


def kron3_dense(A3: Array, A2: Array, A1: Array) -> Array:
    return np.kron(A3, np.kron(A2, A1))


def _single_geometry(op: FullElementOperator) -> Array:
    d = np.asarray(op.d, dtype=np.float64).reshape(-1, 4)
    if d.shape[0] != 1:
        raise OperatorError(f"dense oracles need a single geometry, got {d.shape[0]}")
    return d[0]


def element_matrix(op: FullElementOperator) -> Array:
    """Dense (p+1)^3 x (p+1)^3 element matrix"""

    d = _single_geometry(op)
    M, K = np.diag(op.basis.M), op.basis.K

    return (
        d[0] * kron3_dense(M, M, M)
        + d[1] * kron3_dense(M, M, K)
        + d[2] * kron3_dense(M, K, M)
        + d[3] * kron3_dense(K, M, M)
    )


def schur_dense(op: FullElementOperator) -> Array:
    """
    Dense condensed operator H_BB - H_BI H_II^-1 H_IB

    Rows and columns follow the boundary ordering of classify_dofs. Limited
    to p <= ORACLE_MAX_P.
    """

    if op.basis.p > ORACLE_MAX_P:
        raise OperatorError(f"dense oracle limited to p <= {ORACLE_MAX_P}, got {op.basis.p}")

    classes = classify_dofs(op.basis.p)
    H = element_matrix(op)
    B, I = classes.boundary, classes.interior

    try:
        correction = H[np.ix_(B, I)] @ scipy.linalg.solve(
            H[np.ix_(I, I)], H[np.ix_(I, B)], assume_a="pos"
        )
    except np.linalg.LinAlgError as err:
        raise OperatorError(f"singular interior block: {err}")

    return H[np.ix_(B, B)] - correction


def interior(u: Field3) -> Field3:
    """View of the interior nodes of element fields"""
    return u[..., 1:-1, 1:-1, 1:-1]


def boundary_only(u: Field3) -> Field3:
    """Copy of element fields with the interior set to zero"""
    out = np.array(u, dtype=np.float64, copy=True)
    out[..., 1:-1, 1:-1, 1:-1] = 0.0
    return out


def combine(u_B: Field3, u_I: Field3) -> Field3:
    """Full element fields from boundary values and interior values"""
    out = np.array(np.broadcast_to(u_B, u_I.shape[:-3] + u_B.shape[-3:]), copy=True)
    out[..., 1:-1, 1:-1, 1:-1] = u_I
    return out


def eigenspace_diagonal(eig: InteriorEigen, d: MetricCoefficients) -> Field3:
    """D = d0 + d1 lam[i1] + d2 lam[i2] + d3 lam[i3]"""
    return diag3_build(eig.lam, eig.lam, eig.lam, d)


def interior_inverse_apply(
    eig: InteriorEigen, d: MetricCoefficients, r: Field3, Dinv: Optional[Field3] = None
) -> Field3:
    """Apply H_II^-1 = (S x S x S)^T D^-1 (S x S x S) to interior fields"""

    S = eig.S_II
    n_I = S.shape[0]

    if r.shape[-3:] != (n_I, n_I, n_I):
        raise OperatorError(f"expected interior fields of size {n_I}^3, got {r.shape}")

    if Dinv is None:
        Dinv = 1.0 / eigenspace_diagonal(eig, d)

    w = kron3_apply(S, S, S, r) * Dinv
    record(w.size)

    return kron3_apply(S.T, S.T, S.T, w)


def condense_rhs(op: FullElementOperator, eig: InteriorEigen, F: Field3) -> Field3:
    """F_B - H_BI H_II^-1 F_I as element boundary values"""

    _check_field(op.basis, F)

    w = interior_inverse_apply(eig, op.d, interior(F))
    lifted = np.zeros(w.shape[:-3] + F.shape[-3:])
    lifted[..., 1:-1, 1:-1, 1:-1] = w

    return boundary_only(F - apply_full(op, lifted))


def recover_interior(
    op: FullElementOperator, eig: InteriorEigen, F_I: Field3, u_B: Field3
) -> Field3:
    """Interior solution u_I = H_II^-1 (F_I - H_IB u_B)"""

    _check_field(op.basis, u_B)

    r = F_I - interior(apply_full(op, boundary_only(u_B)))

    return interior_inverse_apply(eig, op.d, r)


def element_load(basis: Basis1D, extents: Array, f: Field3) -> Field3:
    """Element right-hand sides J (M x M x M) f from nodal values of f"""

    _check_field(basis, f)

    M = basis.M
    jacobian = np.prod(np.asarray(extents), axis=-1) / 8.0
    mass = M[:, None, None] * M[None, :, None] * M[None, None, :]

    return jacobian[..., None, None, None] * mass * f


def boundary_slabs(p: int) -> Iterator[Tuple[slice, slice, slice]]:
    """Three disjoint slabs of (i3, i2, i1) covering the element boundary"""

    ends, inner, full = slice(None, None, p), slice(1, -1), slice(None)

    yield ends, full, full
    yield inner, ends, full
    yield inner, inner, ends


LineApply = Callable[[Array], Array]


def apply_boundary_lines(
    u: Field3,
    d: MetricCoefficients,
    M: Array,
    line_apply: LineApply,
    corner: Array,
) -> Field3:
    """
    Primary part H_BB applied to element boundary values

    M is the diagonal 1-D mass, line_apply applies the 1-D stiffness along
    the last axis and corner is its 2x2 block of the end nodes. For every
    direction, lines lying in the element surface get the full stiffness
    while lines piercing the element only couple their two end nodes.
    """

    p = u.shape[-1] - 1
    d = np.asarray(d)
    v = np.zeros(np.broadcast_shapes(u.shape, d.shape[:-1] + (1, 1, 1)))

    W = M[:, None] * M[None, :]
    mass = M[:, None, None] * W[None, :, :]
    ends, inner, full = slice(None, None, p), slice(1, -1), slice(None)

    for slab in boundary_slabs(p):
        index = (Ellipsis,) + slab
        v[index] = (d[..., 0, None, None, None] * mass[slab]) * u[index]
        record(2 * v[index].size)

    for k in (1, 2, 3):
        uk = np.moveaxis(u, -k, -1)
        vk = np.moveaxis(v, -k, -1)
        dk = d[..., k, None, None, None]

        for a, b in ((ends, full), (inner, ends)):
            lines = line_apply(uk[..., a, b, :])
            weight = dk * W[a, b][..., None]
            vk[..., a, b, :] += weight * lines
            record(weight.size + lines.size)

        piercing = uk[..., inner, inner, ends] @ corner.T
        record(2 * piercing.size)
        weight = dk * W[inner, inner][..., None]
        vk[..., inner, inner, ends] += weight * piercing
        record(weight.size + piercing.size)

    return v


def dense_line_apply(K: Array) -> LineApply:
    def apply(x: Array) -> Array:
        return apply_axis(K, 1, x)

    return apply


def arrowhead_line_apply(transformed: TransformedBasis1D) -> LineApply:
    """Apply the arrowhead K~ along the last axis in O(p) per line"""

    Kt, lam = transformed.Kt, transformed.lam
    first, last = Kt[1:-1, 0], Kt[1:-1, -1]

    def apply(x: Array) -> Array:
        y = np.empty_like(x)
        y[..., 1:-1] = lam * x[..., 1:-1] + first * x[..., :1] + last * x[..., -1:]
        y[..., 0] = x @ Kt[0]
        y[..., -1] = x @ Kt[-1]
        record((x.size // x.shape[-1]) * (3 * len(lam) + 2 * x.shape[-1]))
        return y

    return apply


def primary_diagonal(M: Array, K_diagonal: Array, d: MetricCoefficients) -> Field3:
    """Diagonal of the element operator for diagonal M and diag(K), all nodes"""

    d = np.asarray(d)
    MM = M[:, None] * M[None, :]

    def c(k: int) -> Array:
        return d[..., k, None, None, None]

    return (
        c(0) * M[:, None, None] * MM[None, :, :]
        + c(1) * MM[:, :, None] * K_diagonal[None, None, :]
        + c(2) * MM[:, None, :] * K_diagonal[None, :, None]
        + c(3) * MM[None, :, :] * K_diagonal[:, None, None]
    )


@dataclass(frozen=True)
class FaceSuboperator:
    """
    Factorized coupling of one face with the interior eigenspace

    H_EF = d_axis (T x T x g) with the tangent factor T on both directions
    in the face and g along the normal; H_FE is its transpose. tangent is
    None in the transformed system, where it is the identity.
    """

    face: str
    axis: int
    side: int
    tangent: Optional[Array]
    normal: Array


def face_suboperators(
    basis: Basis1D, eig: InteriorEigen, transformed: Optional[TransformedBasis1D] = None
) -> List[FaceSuboperator]:
    """
    Suboperators of the six faces

    Eigenspace (untransformed) system: T = S_II M_II and g = S_II K_I,side.
    Transformed system: T = I and g = K~_I,side.
    """

    if transformed is None:
        tangent: Optional[Array] = eig.S_II * basis.M_II[None, :]
        normals = {side: eig.S_II @ basis.K[1:-1, side] for side in (0, -1)}
    else:
        tangent = None
        normals = {side: transformed.Kt[1:-1, side].copy() for side in (0, -1)}

    return [
        FaceSuboperator(face=name, axis=axis, side=side, tangent=tangent, normal=normals[side])
        for name, axis, side in FACES
    ]


def lift_faces(
    u: Field3, d: MetricCoefficients, suboperators: List[FaceSuboperator]
) -> Field3:
    """Sum of H_EF u_F over the faces, an interior eigenspace field"""

    d = np.asarray(d)
    out: Optional[Field3] = None

    for sub in suboperators:
        f = u[face_index(sub.axis, sub.side)] * d[..., sub.axis, None, None]
        record(f.size)
        f = kron2_apply(sub.tangent, sub.tangent, f)
        lifted = expand_axis(f, sub.normal, sub.axis)
        out = lifted if out is None else out + lifted

    if out is None:
        raise OperatorError("no face suboperators")

    return out


def restrict_faces(
    v: Field3, d: MetricCoefficients, suboperators: List[FaceSuboperator]
) -> Field3:
    """H_FE v for all faces, returned as element boundary values"""

    d = np.asarray(d)
    n = v.shape[-1] + 2
    out = np.zeros(np.broadcast_shapes(v.shape[:-3], d.shape[:-1]) + (n, n, n))

    for sub in suboperators:
        tangent = None if sub.tangent is None else sub.tangent.T
        f = kron2_apply(tangent, tangent, contract_axis(v, sub.normal, sub.axis))
        out[face_index(sub.axis, sub.side)] = f * d[..., sub.axis, None, None]
        record(f.size)

    return out


@dataclass(frozen=True)
class TransformContext:
    """Interior eigenvectors, their inverse S_II^-1 = M_II S_II^T and padded forms"""

    S_II: Array
    S_II_inv: Array
    S: Array
    S_inv: Array


def transform_context(basis: Basis1D, eig: InteriorEigen) -> TransformContext:
    S_II_inv = eig.inverse(basis)
    return TransformContext(
        S_II=eig.S_II, S_II_inv=S_II_inv, S=padded(eig.S_II), S_inv=padded(S_II_inv)
    )


def transform_forward(ctx: TransformContext, u: Field3) -> Field3:
    """u~ = (S^-1 x S^-1 x S^-1)^T u"""
    St = ctx.S_inv.T
    return kron3_apply(St, St, St, u)


def transform_backward(ctx: TransformContext, u: Field3) -> Field3:
    """u = (S x S x S)^T u~"""
    St = ctx.S.T
    return kron3_apply(St, St, St, u)


def transform_rhs(ctx: TransformContext, F: Field3) -> Field3:
    """F~ = (S x S x S) F"""
    return kron3_apply(ctx.S, ctx.S, ctx.S, F)


def boundary_transform(u: Field3, A: Array) -> Field3:
    """
    Apply the interior matrix A entity by entity on element boundary values

    Faces get A on both directions in the face, edges A along the edge and
    vertices are copied. With A = S_II this is the padded (S x S x S)
    restricted to the boundary.
    """

    p = u.shape[-1] - 1
    ends, inner = slice(None, None, p), slice(1, -1)
    out = np.zeros_like(u)

    for _, axis, side in FACES:
        index = face_index(axis, side)
        out[index] = kron2_apply(A, A, u[index])

    for k in (1, 2, 3):
        edges = np.moveaxis(u, -k, -1)[..., ends, ends, inner]
        np.moveaxis(out, -k, -1)[..., ends, ends, inner] = edges @ A.T
        record(A.shape[0] * edges.size)

    out[..., ends, ends, ends] = u[..., ends, ends, ends]

    return out


def estimate_mmc_memory(p: int, n_e: int, bytes_per_real: int = 8) -> int:
    """Storage of per-element face-to-face matrices, 36 n_I^4 reals per element"""

    if p < 2:
        raise OperatorError(f"no interior nodes for p={p}")

    return 36 * (p - 1) ** 4 * bytes_per_real * n_e
