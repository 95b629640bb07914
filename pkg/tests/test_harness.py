import math
import shlex
from pathlib import Path
from typing import List

import pytest
from pydantic import ValidationError

from helmholtz import schema
from helmholtz.harness import (
    ExperimentArguments,
    ExperimentKind,
    ExperimentSpec,
    HarnessError,
    ResultRow,
    columns,
    emit_csv,
    emit_plot_data,
    fit_loglog_slope,
    measure,
    read_csv,
    run_operator_benchmark,
    run_solver_benchmark,
    scaling_exponents,
)

TEST_DATA_DIR = Path(__file__).parent / "data"
INI_TEST_FILE = TEST_DATA_DIR / "experiment.ini"
SECOND_INI_TEST_FILE = TEST_DATA_DIR / "experiment2.ini"


def load_arguments(commandline: str, section: str) -> ExperimentArguments:
    return schema.load(
        ExperimentArguments,
        "test",
        section_name=section,
        alias=True,
        opts=shlex.split(commandline),
        raise_on_validation_error=True,
    )


def test_desk_defaults(monkeypatch: pytest.MonkeyPatch, tmp_path: Path) -> None:
    """Unset flags resolve to desk-scale defaults per experiment kind"""

    monkeypatch.setenv("XDG_DATA_HOME", str(tmp_path))

    spec = ExperimentArguments().to_spec(ExperimentKind.OPERATOR)

    assert spec.p == list(range(2, 13))
    assert spec.counts == [(4, 4, 4)]
    assert spec.lam == [math.pi]
    assert spec.variants == ["mmc", "tpc", "tpt"]
    assert spec.reps == 11 and spec.warmup == 1
    assert spec.kept_runs == 10
    assert spec.domain == pytest.approx((0.0, 2 * math.pi))
    assert spec.out == tmp_path / "helmholtz"

    spec = ExperimentArguments().to_spec(ExperimentKind.ELEMENT_SCALING)

    assert spec.counts == [(2, 2, 2), (4, 4, 4), (8, 8, 8)]
    assert spec.solvers == ["uc", "dc", "bc", "bt"]


def test_paper_scale() -> None:
    """--paper-scale switches to the full sizes, explicit flags still win"""

    spec = ExperimentArguments(paper_scale=True).to_spec(ExperimentKind.SOLVER)

    assert spec.p == list(range(2, 33))
    assert spec.counts == [(8, 8, 8)]
    assert spec.alpha == [1.0, 1.5, 2.0]
    assert spec.reps == 11

    spec = ExperimentArguments(paper_scale=True, p=[4], reps=3).to_spec(ExperimentKind.OPERATOR)

    assert spec.p == [4]
    assert spec.reps == 3
    assert spec.warmup == 1


def test_argument_validation() -> None:
    """Flag combinations and values are checked"""

    assert ExperimentArguments(p_range="2:5").p == [2, 3, 4, 5]
    assert ExperimentArguments(variant=["TPT"]).variant == ["tpt"]
    assert ExperimentArguments(**{"lambda": [1.0]}).lam == [1.0]

    invalid = [
        {"p": [4], "p_range": "2:8"},
        {"p": [1, 2]},
        {"ne": ["2x2"]},
        {"variant": ["dense"]},
        {"solver": ["gmres"]},
        {"reps": 0},
        {"warmup": -1},
        {"mmc_mem_cap": -1},
        {"domain": "1:0"},
        {"log_level": "chatty"},
    ]

    for kwargs in invalid:
        with pytest.raises(ValidationError):
            ExperimentArguments(**kwargs)  # type: ignore

    with pytest.raises(ValidationError):
        ExperimentArguments(reps=2, warmup=2).to_spec(ExperimentKind.OPERATOR)


def test_arguments_from_experiment_files() -> None:
    """[DEFAULT] and sub-command sections feed the flags"""

    args = load_arguments(f"--config {INI_TEST_FILE} --reps 2", "bench-solver")
    spec = args.to_spec(ExperimentKind.SOLVER)

    assert spec.counts == [(2, 2, 2)]
    assert spec.k == 3.0
    assert spec.alpha == [1.0, 1.5]
    assert spec.p == [2, 3, 4]
    assert spec.reps == 2

    args = load_arguments(f"--config {INI_TEST_FILE} {SECOND_INI_TEST_FILE}", "bench-operator")
    spec = args.to_spec(ExperimentKind.OPERATOR)

    assert spec.variants == ["tpc", "tpt"]
    assert spec.lam == [0.0, 3.5]
    assert spec.reps == 5 and spec.warmup == 2
    assert spec.p == list(range(2, 13))


def test_measure() -> None:
    """Runs reps times, returns the last result"""

    calls: List[int] = []

    def run() -> int:
        calls.append(len(calls))
        return len(calls)

    elapsed, result = measure(run, 3, 1)

    assert len(calls) == 3
    assert result == 3
    assert elapsed >= 0

    with pytest.raises(HarnessError):
        measure(run, 2, 2)

    with pytest.raises(HarnessError):
        measure(run, 0, 0)


def test_fit_loglog_slope() -> None:
    assert fit_loglog_slope([1, 2, 4, 8], [1, 4, 16, 64]) == pytest.approx(2.0)
    assert fit_loglog_slope([8, 64], [10, 20]) == pytest.approx(1 / 3)

    with pytest.raises(HarnessError):
        fit_loglog_slope([1], [1])

    with pytest.raises(HarnessError):
        fit_loglog_slope([1, 2], [0, 1])


def row(
    variant: str, p: int, n_e: int = 8, alpha: float = 1.0, lam: float = 0.0, **kwargs: object
) -> ResultRow:
    return ResultRow(
        experiment="operator",
        p=p,
        n_e=n_e,
        alpha=alpha,
        lam=lam,
        variant=variant,
        **kwargs,  # type: ignore
    )


def test_csv_round_trip(tmp_path: Path) -> None:
    """Header plus one line per row, floats survive"""

    rows = [
        row("tpc", 2, time=1 / 3, max_error=0.1, primary_mults=100),
        row("mmc", 3, converged=False, max_error=1e-300, note="skipped: memory"),
    ]

    path = emit_csv(rows, tmp_path / "results" / "operator.csv")

    assert path.read_text().splitlines()[0] == ",".join(columns())
    assert read_csv(path) == rows


def test_csv_empty_and_invalid(tmp_path: Path) -> None:
    """No rows gives a header only, foreign files are rejected"""

    path = emit_csv([], tmp_path / "empty.csv")

    assert path.read_text().strip() == ",".join(columns())
    assert read_csv(path) == []

    foreign = tmp_path / "foreign.csv"
    foreign.write_text("a,b\n1,2\n")

    with pytest.raises(HarnessError):
        read_csv(foreign)

    with pytest.raises(HarnessError):
        read_csv(tmp_path / "missing.csv")


def test_emit_plot_data(tmp_path: Path) -> None:
    """One two-column file per curve, skipped runs left out"""

    rows = [
        row("tpc", 3, time=0.25),
        row("tpc", 2, time=0.5),
        row("tpt", 2, time=0.125),
        row("mmc", 2, note="skipped: estimated"),
    ]

    paths = emit_plot_data(rows, tmp_path, "operator_time")

    assert sorted(path.name for path in paths) == [
        "operator_time_tpc_alpha1_lambda0_ne8.dat",
        "operator_time_tpt_alpha1_lambda0_ne8.dat",
    ]
    assert (tmp_path / "operator_time_tpc_alpha1_lambda0_ne8.dat").read_text() == (
        "# p time\n2 0.5\n3 0.25\n"
    )


def test_operator_benchmark(tmp_path: Path) -> None:
    """Rows per p and variant, mmc skipped above the memory cap"""

    spec = ExperimentSpec(
        kind=ExperimentKind.OPERATOR,
        p=[2, 3],
        counts=[(2, 1, 1)],
        alpha=[1.0],
        lam=[0.0],
        reps=2,
        warmup=1,
        out=tmp_path,
    )

    rows = run_operator_benchmark(spec)

    assert [(r.p, r.variant) for r in rows] == [
        (p, variant) for p in (2, 3) for variant in ("mmc", "tpc", "tpt")
    ]

    for r in rows:
        n_I = r.p - 1
        assert r.n_e == 2
        assert r.note == ""
        assert r.time > 0 and r.setup_time >= 0
        if r.variant == "mmc":
            assert r.condensed_mults == 36 * n_I**4
        else:
            assert r.primary_mults > 0 and r.condensed_mults > 0

    capped = spec.model_copy(update={"mmc_mem_cap": 1, "variants": ["mmc", "tpt"]})
    rows = run_operator_benchmark(capped)

    skipped = [r for r in rows if r.variant == "mmc"]
    assert len(skipped) == 2
    assert all(r.note.startswith("skipped") for r in skipped)
    assert all(r.condensed_mults == 0 for r in skipped)
    assert all(r.note == "" for r in rows if r.variant == "tpt")


def test_solver_benchmark(tmp_path: Path) -> None:
    """Solvers converge to the same discrete solution"""

    spec = ExperimentSpec(
        kind=ExperimentKind.SOLVER,
        p=[5],
        counts=[(2, 2, 2)],
        alpha=[1.0],
        lam=[0.0],
        k=1.0,
        domain=(0.0, 1.0),
        solvers=["uc", "bt"],
        out=tmp_path,
    )

    rows = run_solver_benchmark(spec)

    assert [r.variant for r in rows] == ["uc", "bt"]

    for r in rows:
        assert r.converged
        assert r.n_e == 8
        assert r.iterations > 0
        assert r.operator_mults > 0
        assert r.max_error < 0.5

    uc, bt = rows
    assert bt.preconditioner_mults > 0
    assert uc.preconditioner_mults == 0
    assert abs(uc.max_error - bt.max_error) < 1e-8


def test_scaling_exponents() -> None:
    """Growth exponents per solver, degree, alpha and lambda"""

    rows = [
        row("bt", 4, n_e=8, iterations=10, time=1.0),
        row("bt", 4, n_e=64, iterations=20, time=8.0),
        row("bt", 4, n_e=8, alpha=2.0, iterations=10, time=1.0),
        row("bt", 4, n_e=64, alpha=2.0, iterations=40, time=64.0),
        row("bt", 4, n_e=64, lam=1.0, iterations=5, time=1.0),
        row("uc", 4, n_e=8, iterations=10, time=1.0),
    ]

    exponents = scaling_exponents(rows)

    assert list(exponents) == ["bt_p4_alpha1_lambda0", "bt_p4_alpha2_lambda0"]
    assert exponents["bt_p4_alpha1_lambda0"] == pytest.approx((1 / 3, 1.0))
    assert exponents["bt_p4_alpha2_lambda0"] == pytest.approx((2 / 3, 2.0))
