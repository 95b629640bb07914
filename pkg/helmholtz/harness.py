#!/usr/bin/env python

"""
Benchmark experiments: operator evaluation, solvers and element scaling

ExperimentArguments is the flag surface of every sub-command (see cli.py).
It resolves into an ExperimentSpec, with desk-scale defaults per experiment
kind, or the full-size setup with --paper-scale. Runners return
ResultRow lists that emit_csv writes as CSV and emit_plot_data as
two-column data files per curve.
"""

import csv
import logging
import math
import time
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, TypeVar

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, model_validator

from . import xdg
from .basis import build_basis, interior_eigendecomposition, transformed_matrices
from .condensed import (
    CondensedOperator,
    MemoryCapExceeded,
    precompute_mmc,
    precompute_tpc,
    precompute_tpt,
)
from .helpers import (
    ArgumentError,
    HelmholtzError,
    parse_counts,
    parse_domain,
    parse_range,
    raise_if_more_than_one,
)
from .mesh import build_mesh, element_nodes, metric_coefficients
from .operators import FullElementOperator, boundary_only, estimate_mmc_memory
from .problem import ManufacturedProblem
from .solver import SolverConfig, SolverVariant, solve_helmholtz
from .tensor import counting

logger = logging.getLogger(__name__)

Array = npt.NDArray[np.float64]

T = TypeVar("T")

VARIANTS = ("mmc", "tpc", "tpt")
SOLVERS = tuple(variant.value for variant in SolverVariant)

CONFIG_ID = "helmholtz"


class HarnessError(HelmholtzError):
    pass


class ExperimentKind(str, Enum):
    OPERATOR = "operator"
    SOLVER = "solver"
    ELEMENT_SCALING = "element-scaling"
    SOLVE = "solve"


# Defaults per experiment kind: desk scale and full size
DESK_DEFAULTS: Dict[ExperimentKind, Dict[str, Any]] = {
    ExperimentKind.OPERATOR: {
        "p": list(range(2, 13)),
        "ne": ["4x4x4"],
        "alpha": [1.0],
        "lam": [math.pi],
        "reps": 11,
        "warmup": 1,
    },
    ExperimentKind.SOLVER: {
        "p": [4, 8, 12, 16],
        "ne": ["8x8x8"],
        "alpha": [1.0, 1.5, 2.0],
        "lam": [0.0],
        "reps": 1,
        "warmup": 0,
    },
    ExperimentKind.ELEMENT_SCALING: {
        "p": [8],
        "ne": ["2x2x2", "4x4x4", "8x8x8"],
        "alpha": [1.0],
        "lam": [0.0],
        "reps": 1,
        "warmup": 0,
    },
    ExperimentKind.SOLVE: {
        "p": [8],
        "ne": ["4x4x4"],
        "alpha": [1.0],
        "lam": [0.0],
        "reps": 1,
        "warmup": 0,
    },
}

PAPER_DEFAULTS: Dict[ExperimentKind, Dict[str, Any]] = {
    ExperimentKind.OPERATOR: {
        "p": list(range(2, 33)),
        "ne": ["8x8x8"],
        "reps": 101,
        "warmup": 1,
    },
    ExperimentKind.SOLVER: {
        "p": list(range(2, 33)),
        "ne": ["8x8x8"],
        "reps": 11,
        "warmup": 1,
    },
    ExperimentKind.ELEMENT_SCALING: {
        "p": [16],
        "ne": ["2x2x2", "4x4x4", "8x8x8", "16x16x16"],
        "reps": 11,
        "warmup": 1,
    },
    ExperimentKind.SOLVE: {},
}


class ExperimentSpec(BaseModel):
    """A resolved experiment"""

    kind: ExperimentKind
    p: List[int]
    counts: List[Tuple[int, int, int]]
    alpha: List[float]
    lam: List[float]
    k: float = 5.0
    variants: List[str] = Field(default_factory=lambda: list(VARIANTS))
    solvers: List[str] = Field(default_factory=lambda: list(SOLVERS))
    tolerance: float = 1e-12
    max_iterations: int = 20000
    reps: int = Field(default=1, ge=1)
    warmup: int = Field(default=0, ge=0)
    domain: Tuple[float, float] = (0.0, 2 * math.pi)
    out: Path = Path(".")
    mmc_mem_cap: int = 2**31

    @model_validator(mode="after")
    def check(self) -> "ExperimentSpec":
        if not self.p or min(self.p) < 2:
            raise ArgumentError(f"polynomial degrees must be at least 2, got {self.p}")
        if self.warmup >= self.reps:
            raise ArgumentError(
                f"--warmup ({self.warmup}) must be smaller than --reps ({self.reps})"
            )
        return self

    @property
    def kept_runs(self) -> int:
        return self.reps - self.warmup


class ExperimentArguments(BaseModel):
    """Command line flags shared by all sub-commands"""

    model_config = ConfigDict(populate_by_name=True)

    p: List[int] = Field(default=[], description="Polynomial degrees, e.g. 2,4,8")
    p_range: Optional[str] = Field(default=None, description="Inclusive degree range A:B")
    ne: List[str] = Field(
        default=[], description="Elements per direction N1xN2xN3 (a list for bench-scaling)"
    )
    alpha: List[float] = Field(default=[], description="Mesh expansion factors")
    lam: List[float] = Field(default=[], alias="lambda", description="Helmholtz parameters")
    k: float = Field(default=5.0, description="Wave number of the manufactured solution")
    variant: List[str] = Field(
        default=list(VARIANTS), description="Condensed operators: mmc,tpc,tpt"
    )
    solver: List[str] = Field(default=list(SOLVERS), description="Solvers: uc,dc,bc,bt")
    tol: float = Field(default=1e-12, description="Relative residual reduction")
    max_iterations: int = Field(default=20000, description="CG iteration limit")
    reps: Optional[int] = Field(default=None, description="Runs per measurement")
    warmup: Optional[int] = Field(
        default=None, description="Discarded leading runs per measurement"
    )
    paper_scale: bool = Field(default=False, description="Use the full-size problems (p up to 32, 8x8x8 elements)")
    out: Optional[str] = Field(
        default=None, description="Output directory (default $XDG_DATA_HOME/helmholtz)"
    )
    mmc_mem_cap: int = Field(default=2**31, description="Memory cap of mmc matrices in bytes")
    domain: str = Field(default="0:2pi", description="Cube domain LO:HI")
    log_level: str = Field(default="INFO", description="Logging level")

    @model_validator(mode="after")
    def check(self) -> "ExperimentArguments":
        raise_if_more_than_one({"p": self.p, "p_range": self.p_range}, ["p", "p_range"])

        if self.p_range:
            self.p = parse_range(self.p_range)
            self.p_range = None

        if self.p and min(self.p) < 2:
            raise ArgumentError(f"polynomial degrees must be at least 2, got {self.p}")

        for counts in self.ne:
            parse_counts(counts)

        self.variant = [name.lower() for name in self.variant]
        self.solver = [name.lower() for name in self.solver]

        unknown = [name for name in self.variant if name not in VARIANTS]
        if unknown:
            raise ArgumentError(f"unknown --variant {unknown}, expected {','.join(VARIANTS)}")

        unknown = [name for name in self.solver if name not in SOLVERS]
        if unknown:
            raise ArgumentError(f"unknown --solver {unknown}, expected {','.join(SOLVERS)}")

        if self.reps is not None and self.reps < 1:
            raise ArgumentError(f"--reps must be at least 1, got {self.reps}")

        if self.warmup is not None and self.warmup < 0:
            raise ArgumentError(f"--warmup must be non-negative, got {self.warmup}")

        if self.mmc_mem_cap < 0:
            raise ArgumentError(f"--mmc-mem-cap must be non-negative, got {self.mmc_mem_cap}")

        parse_domain(self.domain)

        if not isinstance(logging.getLevelName(self.log_level.upper()), int):
            raise ArgumentError(f"unknown --log-level {self.log_level}")

        return self

    def to_spec(self, kind: ExperimentKind) -> ExperimentSpec:
        """Resolve flags into an experiment, filling unset values per kind"""

        defaults = dict(DESK_DEFAULTS[kind])
        if self.paper_scale:
            defaults.update(PAPER_DEFAULTS[kind])

        def pick(value: Optional[T], name: str) -> T:
            if value is None or value == []:
                return defaults[name]  # type: ignore
            return value

        out = Path(self.out) if self.out else xdg.get_data_dir(CONFIG_ID)

        return ExperimentSpec(
            kind=kind,
            p=pick(self.p, "p"),
            counts=[parse_counts(counts) for counts in pick(self.ne, "ne")],
            alpha=pick(self.alpha, "alpha"),
            lam=pick(self.lam, "lam"),
            k=self.k,
            variants=self.variant,
            solvers=self.solver,
            tolerance=self.tol,
            max_iterations=self.max_iterations,
            reps=pick(self.reps, "reps"),
            warmup=pick(self.warmup, "warmup"),
            domain=parse_domain(self.domain),
            out=out,
            mmc_mem_cap=self.mmc_mem_cap,
        )


class ResultRow(BaseModel):
    """One measurement; column order of the CSV output follows the fields"""

    experiment: str
    p: int
    n_e: int
    alpha: float
    lam: float
    variant: str
    iterations: int = 0
    converged: bool = True
    setup_time: float = 0.0
    time: float = 0.0
    primary_mults: int = 0
    condensed_mults: int = 0
    operator_mults: int = 0
    preconditioner_mults: int = 0
    max_error: float = math.nan
    note: str = ""


def columns() -> List[str]:
    return list(ResultRow.model_fields)


def measure(run: Callable[[], T], reps: int, warmup: int) -> Tuple[float, T]:
    """
    Run `reps` times and return the mean time of the runs after the first
    `warmup` ones together with the last result
    """

    if reps < 1 or not 0 <= warmup < reps:
        raise HarnessError(f"invalid repetitions reps={reps}, warmup={warmup}")

    times = []
    result: Optional[T] = None

    for _ in range(reps):
        start = time.perf_counter()
        result = run()
        times.append(time.perf_counter() - start)

    return float(np.mean(times[warmup:])), result  # type: ignore


def fit_loglog_slope(x: List[float], y: List[float]) -> float:
    """Least-squares slope of log(y) over log(x)"""

    if len(x) != len(y) or len(x) < 2:
        raise HarnessError(f"need at least two points for a slope, got {len(x)}")

    xs, ys = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)

    if np.any(xs <= 0) or np.any(ys <= 0):
        raise HarnessError("log-log slope needs positive values")

    slope, _ = np.polyfit(np.log(xs), np.log(ys), 1)

    return float(slope)


def build_operator(
    variant: str, op: FullElementOperator, mmc_mem_cap: Optional[int] = None
) -> CondensedOperator:
    eig = interior_eigendecomposition(op.basis)

    if variant == "mmc":
        return precompute_mmc(op, eig, mem_cap=mmc_mem_cap)
    if variant == "tpc":
        return precompute_tpc(op, eig)
    if variant == "tpt":
        return precompute_tpt(op, transformed_matrices(op.basis, eig), eig)

    raise HarnessError(f"unknown operator variant {variant}")


def run_operator_benchmark(spec: ExperimentSpec) -> List[ResultRow]:
    """
    Setup time, mean apply time and multiplications per element of the
    condensed operators for every mesh, lambda, p and variant
    """

    rows: List[ResultRow] = []
    rng = np.random.default_rng(0)

    for counts in spec.counts:
        for alpha in spec.alpha:
            mesh = build_mesh(counts, spec.domain, alpha)
            n_e = mesh.n_elements

            for lam in spec.lam:
                d = metric_coefficients(mesh.extents, lam)

                for p in spec.p:
                    basis = build_basis(p)
                    op = FullElementOperator(basis=basis, d=d)
                    u = boundary_only(rng.standard_normal((n_e,) + (p + 1,) * 3))

                    for variant in spec.variants:
                        row = ResultRow(
                            experiment=spec.kind.value,
                            p=p,
                            n_e=n_e,
                            alpha=alpha,
                            lam=lam,
                            variant=variant,
                        )

                        if variant == "mmc" and estimate_mmc_memory(p, n_e) > spec.mmc_mem_cap:
                            row.note = (
                                f"skipped: estimated {estimate_mmc_memory(p, n_e)} bytes "
                                f"exceed the cap of {spec.mmc_mem_cap}"
                            )
                            logger.info("mmc p=%d n_e=%d %s", p, n_e, row.note)
                            rows.append(row)
                            continue

                        start = time.perf_counter()
                        try:
                            operator = build_operator(variant, op, spec.mmc_mem_cap)
                        except MemoryCapExceeded as err:
                            row.note = f"skipped: {err}"
                            logger.warning("mmc p=%d n_e=%d %s", p, n_e, row.note)
                            rows.append(row)
                            continue
                        row.setup_time = time.perf_counter() - start

                        with counting() as primary:
                            operator.apply_primary(u)
                        with counting() as condensed:
                            operator.apply_condensed(u)

                        row.primary_mults = primary.count // n_e
                        row.condensed_mults = condensed.count // n_e
                        row.time, _ = measure(
                            lambda: operator.apply(u), spec.reps, spec.warmup
                        )

                        logger.info(
                            "%s p=%d n_e=%d lambda=%g: setup %.3gs, apply %.3gs",
                            variant,
                            p,
                            n_e,
                            lam,
                            row.setup_time,
                            row.time,
                        )
                        rows.append(row)

    return rows


def max_nodal_error(problem: ManufacturedProblem, x: Array, u: Array) -> float:
    """Max over all element nodes of |u - u_ex|"""
    return float(np.max(np.abs(u - problem.evaluate_solution(x))))


def _solve_rows(spec: ExperimentSpec, counts: Tuple[int, int, int]) -> List[ResultRow]:
    rows: List[ResultRow] = []

    for alpha in spec.alpha:
        mesh = build_mesh(counts, spec.domain, alpha)

        for lam in spec.lam:
            problem = ManufacturedProblem(k=spec.k, lam=lam, domain=spec.domain)

            for p in spec.p:
                x = element_nodes(mesh, build_basis(p))

                for solver in spec.solvers:
                    config = SolverConfig(
                        variant=SolverVariant(solver),
                        tolerance=spec.tolerance,
                        max_iterations=spec.max_iterations,
                    )
                    elapsed, (u, report) = measure(
                        lambda: solve_helmholtz(problem, mesh, p, config),
                        spec.reps,
                        spec.warmup,
                    )

                    row = ResultRow(
                        experiment=spec.kind.value,
                        p=p,
                        n_e=mesh.n_elements,
                        alpha=alpha,
                        lam=lam,
                        variant=solver,
                        iterations=report.iterations,
                        converged=report.converged,
                        setup_time=report.setup_time,
                        time=elapsed,
                        operator_mults=report.operator_mults,
                        preconditioner_mults=report.preconditioner_mults,
                        max_error=max_nodal_error(problem, x, u),
                        note="" if report.converged else "not converged",
                    )

                    logger.info(
                        "%s p=%d n_e=%d alpha=%g: %d iterations, %.3gs, error %.3g",
                        solver,
                        p,
                        mesh.n_elements,
                        alpha,
                        row.iterations,
                        row.time,
                        row.max_error,
                    )
                    rows.append(row)

    return rows


def run_solver_benchmark(spec: ExperimentSpec) -> List[ResultRow]:
    """Iterations, time (setup included) and max nodal error per solver"""

    rows: List[ResultRow] = []
    for counts in spec.counts:
        rows.extend(_solve_rows(spec, counts))
    return rows


def scaling_exponents(rows: List[ResultRow]) -> Dict[str, Tuple[float, float]]:
    """Fitted growth exponents of (iterations, time) over n_e per solver, p, alpha and lambda"""

    exponents: Dict[str, Tuple[float, float]] = {}
    series: Dict[str, List[ResultRow]] = {}

    for row in rows:
        series.setdefault(scaling_series(row), []).append(row)

    for name, members in series.items():
        if len({row.n_e for row in members}) < 2:
            continue
        n_e = [float(row.n_e) for row in members]
        exponents[name] = (
            fit_loglog_slope(n_e, [float(max(row.iterations, 1)) for row in members]),
            fit_loglog_slope(n_e, [max(row.time, 1e-12) for row in members]),
        )

    return exponents


def run_element_scaling(spec: ExperimentSpec) -> List[ResultRow]:
    """Solver runs over growing element counts; logs the fitted exponents"""

    rows = run_solver_benchmark(spec)

    for name, (iterations, runtime) in scaling_exponents(rows).items():
        logger.info(
            "%s: iterations ~ n_e^%.3f, time ~ n_e^%.3f", name, iterations, runtime
        )

    return rows


def run_single_solve(spec: ExperimentSpec) -> List[ResultRow]:
    return run_solver_benchmark(spec)


RUNNERS: Dict[ExperimentKind, Callable[[ExperimentSpec], List[ResultRow]]] = {
    ExperimentKind.OPERATOR: run_operator_benchmark,
    ExperimentKind.SOLVER: run_solver_benchmark,
    ExperimentKind.ELEMENT_SCALING: run_element_scaling,
    ExperimentKind.SOLVE: run_single_solve,
}


def _format(value: Any) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def emit_csv(rows: List[ResultRow], path: Path) -> Path:
    """Write rows with a header line, floats with 17 significant digits"""

    path = Path(path)

    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(columns())
            for row in rows:
                writer.writerow([_format(getattr(row, column)) for column in columns()])
    except OSError as err:
        raise HarnessError(f"unable to write results to {path}: {err}")

    logger.info("wrote %d rows to %s", len(rows), path)

    return path


def read_csv(path: Path) -> List[ResultRow]:
    """Parse a file written by emit_csv"""

    try:
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames != columns():
                raise HarnessError(f"unexpected columns in {path}: {reader.fieldnames}")
            return [ResultRow(**record) for record in reader]
    except OSError as err:
        raise HarnessError(f"unable to read results from {path}: {err}")


def default_series(row: ResultRow) -> str:
    return f"{row.variant}_alpha{row.alpha:g}_lambda{row.lam:g}_ne{row.n_e}"


def scaling_series(row: ResultRow) -> str:
    return f"{row.variant}_p{row.p}_alpha{row.alpha:g}_lambda{row.lam:g}"


def emit_plot_data(
    rows: List[ResultRow],
    directory: Path,
    experiment: str,
    x: str = "p",
    y: str = "time",
    series: Callable[[ResultRow], str] = default_series,
) -> List[Path]:
    """
    Write one two-column file `<experiment>_<series>.dat` per curve

    Rows without a measurement (skipped runs) are left out.
    """

    curves: Dict[str, List[Tuple[float, float]]] = {}

    for row in rows:
        if row.note.startswith("skipped"):
            continue
        curves.setdefault(series(row), []).append(
            (float(getattr(row, x)), float(getattr(row, y)))
        )

    paths = []
    directory = Path(directory)

    for name, points in curves.items():
        path = directory / f"{experiment}_{name}.dat"
        try:
            directory.mkdir(parents=True, exist_ok=True)
            with open(path, "w") as f:
                f.write(f"# {x} {y}\n")
                for px, py in sorted(points):
                    f.write(f"{px:.17g} {py:.17g}\n")
        except OSError as err:
            raise HarnessError(f"unable to write plot data to {path}: {err}")
        paths.append(path)

    return paths
