#!/usr/bin/env python

"""
Preconditioned conjugate gradients on the assembled condensed system

Solver configurations:

    uc   unpreconditioned, tpc operator
    dc   inverse of the assembled diagonal, tpc operator
    bc   exact inverse of every assembled face, edge and vertex block, tpc operator
    bt   inverse of the assembled diagonal in the transformed system, tpt operator

bc and bt are the same preconditioned system up to a similarity transform:
the transformed entity blocks are diagonal, so bc is applied as
T^T Delta^-1 T with the entity-wise eigenvector transform T.
"""

import logging
import time
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Tuple

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field

from .basis import build_basis, interior_eigendecomposition, transformed_matrices
from .condensed import (
    CondensedOperator,
    CondensedOperatorTPT,
    condensed_diagonal,
    precompute_tpc,
    precompute_tpt,
)
from .helpers import HelmholtzError
from .mesh import (
    CartesianMesh,
    DofMap,
    build_dof_maps,
    dirichlet_values,
    distinct_geometries,
    element_nodes,
    gather,
    metric_coefficients,
    scatter,
)
from .operators import (
    FullElementOperator,
    boundary_only,
    boundary_transform,
    combine,
    eigenspace_diagonal,
    element_load,
    element_matrix,
    face_suboperators,
    interior,
    transform_backward,
    transform_context,
    transform_rhs,
)
from .problem import ManufacturedProblem
from .tensor import MulCounter, counting, record

logger = logging.getLogger(__name__)

Array = npt.NDArray[np.float64]
BoolArray = npt.NDArray[np.bool_]

LinearOperator = Callable[[Array], Array]

# Log the residual every this many iterations
LOG_EVERY = 50


class SolverError(HelmholtzError):
    pass


class BreakdownError(SolverError):
    pass


class SolverVariant(str, Enum):
    UC = "uc"
    DC = "dc"
    BC = "bc"
    BT = "bt"

    @property
    def operator_variant(self) -> str:
        return "tpt" if self is SolverVariant.BT else "tpc"


class SolverConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    variant: SolverVariant = Field(default=SolverVariant.BT, description="Solver configuration")
    tolerance: float = Field(
        default=1e-12, gt=0.0, lt=1.0, description="Relative residual reduction"
    )
    max_iterations: int = Field(default=20000, ge=1, description="Iteration limit")

    @property
    def operator_variant(self) -> str:
        return self.variant.operator_variant


class PreconditionerKind(str, Enum):
    IDENTITY = "identity"
    DIAGONAL = "diagonal"
    BLOCK = "block"
    TRANSFORMED_DIAGONAL = "transformed-diagonal"


@dataclass
class Preconditioner:
    kind: PreconditionerKind
    apply: LinearOperator
    inverse_diagonal: Optional[Array] = None

    def __call__(self, r: Array) -> Array:
        return self.apply(r)


class SolveReport(BaseModel):
    variant: str = ""
    iterations: int = 0
    residuals: List[float] = Field(default_factory=list)
    converged: bool = False
    operator_mults: int = 0
    preconditioner_mults: int = 0
    vector_mults: int = 0
    setup_time: float = 0.0
    solve_time: float = 0.0

    @property
    def wall_time(self) -> float:
        return self.setup_time + self.solve_time

    @property
    def reduction(self) -> float:
        if not self.residuals or self.residuals[0] == 0.0:
            return 0.0
        return self.residuals[-1] / self.residuals[0]


def identity_preconditioner() -> Preconditioner:
    return Preconditioner(kind=PreconditionerKind.IDENTITY, apply=lambda r: r.copy())


def cg_solve(
    apply: LinearOperator,
    precond: Optional[Preconditioner],
    rhs: Array,
    x0: Optional[Array] = None,
    config: Optional[SolverConfig] = None,
    free: Optional[BoolArray] = None,
) -> Tuple[Array, SolveReport]:
    """
    Preconditioned conjugate gradients with fixed (Dirichlet) entries

    Entries outside `free` keep their value from x0; residuals and search
    directions are masked there. Stops when the Euclidean norm of the
    residual has dropped by config.tolerance relative to the initial one.
    Running out of iterations is reported, a non-positive curvature p^T A p
    raises BreakdownError.
    """

    config = config if config is not None else SolverConfig()
    precond = precond if precond is not None else identity_preconditioner()

    if not np.all(np.isfinite(rhs)):
        raise SolverError("right-hand side is not finite")

    x = np.zeros_like(rhs) if x0 is None else np.array(x0, dtype=np.float64, copy=True)
    fixed = np.zeros(rhs.shape, dtype=bool) if free is None else ~free

    report = SolveReport(variant=config.variant.value)
    operator_counter, precond_counter, vector_counter = MulCounter(), MulCounter(), MulCounter()
    n = rhs.size

    start = time.perf_counter()

    with counting(operator_counter):
        r = rhs - apply(x)
    r[fixed] = 0.0

    with counting(precond_counter):
        z = precond(r)
    z[fixed] = 0.0

    with counting(vector_counter):
        rz = float(r @ z)
        norm = float(np.linalg.norm(r))
        record(2 * n)

    report.residuals.append(norm)
    target = config.tolerance * norm
    search = z

    if norm == 0.0:
        report.converged = True

    while not report.converged and report.iterations < config.max_iterations:
        with counting(operator_counter):
            q = apply(search)
        q[fixed] = 0.0

        with counting(vector_counter):
            curvature = float(search @ q)
            record(n)

        if not curvature > 0.0:
            raise BreakdownError(
                f"non-positive curvature {curvature:g} in iteration {report.iterations + 1}, "
                "the operator is not positive definite on the free entries"
            )

        alpha = rz / curvature

        with counting(vector_counter):
            x += alpha * search
            r -= alpha * q
            norm = float(np.linalg.norm(r))
            record(3 * n)

        report.iterations += 1
        report.residuals.append(norm)

        if report.iterations % LOG_EVERY == 0:
            logger.debug("iteration %d, residual %g", report.iterations, norm)

        if norm <= target:
            report.converged = True
            break

        with counting(precond_counter):
            z = precond(r)
        z[fixed] = 0.0

        with counting(vector_counter):
            rz_next = float(r @ z)
            search = z + (rz_next / rz) * search
            record(2 * n)

        rz = rz_next

    report.solve_time = time.perf_counter() - start
    report.operator_mults = operator_counter.count
    report.preconditioner_mults = precond_counter.count
    report.vector_mults = vector_counter.count

    if not report.converged:
        logger.warning(
            "%s: no convergence after %d iterations (reduction %g)",
            report.variant or "cg",
            report.iterations,
            report.reduction,
        )

    return x, report


class CondensedSystem:
    """Assembled condensed operator R^T H^ R over a numbered mesh"""

    def __init__(self, operator: CondensedOperator, dofs: DofMap) -> None:
        if operator.n_elements != dofs.n_elements or operator.p != dofs.p:
            raise SolverError(
                f"{operator} does not match a map of {dofs.n_elements} elements, p={dofs.p}"
            )

        self.operator = operator
        self.dofs = dofs

    @property
    def size(self) -> int:
        return self.dofs.n_condensed

    @property
    def free(self) -> BoolArray:
        return self.dofs.free

    def apply(self, x: Array) -> Array:
        u = scatter(self.dofs, x, condensed=True)
        return gather(self.dofs, self.operator.apply(u), condensed=True)

    def diagonal(self) -> Array:
        return gather(self.dofs, self.operator.diagonal(), condensed=True)

    def to_dense(self) -> Array:
        """Dense assembled matrix, one application per unit vector"""
        columns = [self.apply(unit) for unit in np.eye(self.size)]
        return np.stack(columns, axis=1)


def _inverse(diagonal: Array, name: str) -> Array:
    if np.any(diagonal <= 0.0):
        raise SolverError(
            f"non-positive entry {diagonal.min():g} in the assembled {name} diagonal"
        )
    return 1.0 / diagonal


def _scale(inverse: Array) -> LinearOperator:
    def apply(r: Array) -> Array:
        record(r.size)
        return inverse * r

    return apply


def build_diagonal_preconditioner(system: CondensedSystem) -> Preconditioner:
    """Inverse of the exact assembled diagonal (dc)"""

    if system.operator.transformed:
        raise SolverError("the diagonal preconditioner works on the untransformed system")

    inverse = _inverse(system.diagonal(), "condensed")

    return Preconditioner(
        kind=PreconditionerKind.DIAGONAL, apply=_scale(inverse), inverse_diagonal=inverse
    )


def build_transformed_diagonal_preconditioner(system: CondensedSystem) -> Preconditioner:
    """Inverse of the assembled diagonal of the transformed system (bt)"""

    if not isinstance(system.operator, CondensedOperatorTPT):
        raise SolverError("the transformed diagonal preconditioner needs a tpt operator")

    inverse = _inverse(system.diagonal(), "transformed")

    return Preconditioner(
        kind=PreconditionerKind.TRANSFORMED_DIAGONAL,
        apply=_scale(inverse),
        inverse_diagonal=inverse,
    )


def transformed_system_diagonal(system: CondensedSystem) -> Array:
    """Assembled diagonal of the transformed counterpart of an untransformed system"""

    operator = system.operator
    transformed = transformed_matrices(operator.basis, operator.eig)
    unique, inverse = distinct_geometries(operator.d)

    diagonal = condensed_diagonal(
        transformed.Mt,
        transformed.Kt_diagonal,
        1.0 / eigenspace_diagonal(operator.eig, unique),
        unique,
        face_suboperators(operator.basis, operator.eig, transformed),
    )

    return gather(system.dofs, diagonal[inverse], condensed=True)


def build_block_preconditioner(system: CondensedSystem) -> Preconditioner:
    """
    Exact inverse of every assembled entity block (bc)

    Each face, edge and vertex block becomes diagonal under the entity-wise
    eigenvector transform T, so the inverse is T^T Delta^-1 T with Delta the
    diagonal of the transformed assembled operator.
    """

    if system.operator.transformed:
        raise SolverError("the block preconditioner works on the untransformed system")

    dofs = system.dofs
    S = system.operator.eig.S_II
    inverse = _inverse(transformed_system_diagonal(system), "transformed")
    multiplicity = dofs.multiplicity[: dofs.n_condensed]

    def transform(x: Array, A: Array) -> Array:
        local = boundary_transform(scatter(dofs, x, condensed=True), A)
        return gather(dofs, local, condensed=True) / multiplicity

    def apply(r: Array) -> Array:
        t = transform(r, S) * inverse
        record(t.size)
        return transform(t, S.T)

    return Preconditioner(kind=PreconditionerKind.BLOCK, apply=apply, inverse_diagonal=inverse)


def build_preconditioner(variant: SolverVariant, system: CondensedSystem) -> Preconditioner:
    if variant is SolverVariant.UC:
        return identity_preconditioner()
    if variant is SolverVariant.DC:
        return build_diagonal_preconditioner(system)
    if variant is SolverVariant.BC:
        return build_block_preconditioner(system)
    return build_transformed_diagonal_preconditioner(system)


def assemble_dense(dofs: DofMap, op: FullElementOperator) -> Array:
    """Dense assembled matrix of the full (uncondensed) system, small meshes only"""

    unique, inverse = distinct_geometries(op.d)
    matrices = [element_matrix(FullElementOperator(basis=op.basis, d=row)) for row in unique]

    A = np.zeros((dofs.n_global, dofs.n_global))
    for table, g in zip(dofs.full_table, inverse):
        A[np.ix_(table, table)] += matrices[g]

    return A


def solve_helmholtz(
    problem: ManufacturedProblem,
    mesh: CartesianMesh,
    p: int,
    config: Optional[SolverConfig] = None,
) -> Tuple[Array, SolveReport]:
    """
    Solve with static condensation, Dirichlet data from the exact solution

    uc, dc and bc condense with the tpc operator. bt transforms the element
    right-hand sides and the Dirichlet data, condenses with the tpt operator
    and transforms the solution back. Returns the nodal solution on all
    elements, shape (n_e, p+1, p+1, p+1).
    """

    config = config if config is not None else SolverConfig()
    start = time.perf_counter()

    basis = build_basis(p)
    eig = interior_eigendecomposition(basis)
    dofs = build_dof_maps(mesh, p)
    op = FullElementOperator(basis=basis, d=metric_coefficients(mesh.extents, problem.lam))

    x = element_nodes(mesh, basis)
    F = element_load(basis, mesh.extents, problem.evaluate_rhs(x))
    boundary = boundary_only(problem.evaluate_solution(x))

    ctx = transform_context(basis, eig)

    operator: CondensedOperator
    if config.operator_variant == "tpt":
        operator = precompute_tpt(op, transformed_matrices(basis, eig), eig)
        F = transform_rhs(ctx, F)
        boundary = boundary_transform(boundary, ctx.S_II_inv.T)
    else:
        operator = precompute_tpc(op, eig)

    system = CondensedSystem(operator, dofs)
    precond = build_preconditioner(config.variant, system)

    rhs = gather(dofs, operator.condense_rhs(F), condensed=True)
    x0 = dirichlet_values(dofs, boundary)

    setup_time = time.perf_counter() - start

    solution, report = cg_solve(system.apply, precond, rhs, x0, config, free=dofs.free)

    recover_start = time.perf_counter()

    u_B = scatter(dofs, solution, condensed=True)
    u = combine(u_B, operator.recover_interior(interior(F), u_B))

    if config.operator_variant == "tpt":
        u = transform_backward(ctx, u)

    report.setup_time = setup_time
    report.solve_time += time.perf_counter() - recover_start

    logger.debug(
        "%s p=%d: %d iterations, converged=%s",
        config.variant.value,
        p,
        report.iterations,
        report.converged,
    )

    return u, report
