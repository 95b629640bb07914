from .basis import (  # noqa: F401
    Basis1D,
    build_basis,
    interior_eigendecomposition,
    transformed_matrices,
)
from .condensed import (  # noqa: F401
    CondensedOperator,
    MemoryCapExceeded,
    precompute_mmc,
    precompute_tpc,
    precompute_tpt,
)
from .config import handle_args  # noqa: F401
from .harness import (  # noqa: F401
    ExperimentArguments,
    ExperimentSpec,
    ResultRow,
    emit_csv,
    read_csv,
    run_element_scaling,
    run_operator_benchmark,
    run_solver_benchmark,
)
from .helpers import HelmholtzError  # noqa: F401
from .mesh import build_dof_maps, build_mesh, metric_coefficients  # noqa: F401
from .operators import FullElementOperator, estimate_mmc_memory  # noqa: F401
from .problem import ManufacturedProblem  # noqa: F401
from .schema import load as load  # noqa: F401
from .solver import (  # noqa: F401
    SolveReport,
    SolverConfig,
    SolverVariant,
    cg_solve,
    solve_helmholtz,
)
from .xdg import get_config_dir, get_data_dir  # noqa: F401

__all__ = [
    "Basis1D",
    "CondensedOperator",
    "ExperimentArguments",
    "ExperimentSpec",
    "FullElementOperator",
    "HelmholtzError",
    "ManufacturedProblem",
    "MemoryCapExceeded",
    "ResultRow",
    "SolveReport",
    "SolverConfig",
    "SolverVariant",
    "build_basis",
    "build_dof_maps",
    "build_mesh",
    "cg_solve",
    "emit_csv",
    "estimate_mmc_memory",
    "get_config_dir",
    "get_data_dir",
    "handle_args",
    "interior_eigendecomposition",
    "load",
    "metric_coefficients",
    "precompute_mmc",
    "precompute_tpc",
    "precompute_tpt",
    "read_csv",
    "run_element_scaling",
    "run_operator_benchmark",
    "run_solver_benchmark",
    "solve_helmholtz",
    "transformed_matrices",
]
