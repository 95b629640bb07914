#!/usr/bin/env python

"""
helmholtz command line

    helmholtz bench-operator --p-range 2:12 --ne 4x4x4 --lambda 3.14159
    helmholtz bench-solver --p 4,8 --alpha 1,1.5,2 --solver bc,bt
    helmholtz bench-scaling --p 8 --ne 2x2x2,4x4x4,8x8x8
    helmholtz solve --p 8 --ne 4x4x4 --solver bt

Flags can also be given in $XDG_CONFIG_HOME/helmholtz/helmholtz.ini (or any
file passed with --config), in [DEFAULT] or in a section named after the
sub-command, and as HELMHOLTZ_* environment variables.
"""

import logging
import sys
from typing import Callable, Dict, List, Optional, Tuple

from pydantic import ValidationError

from . import schema
from .harness import (
    RUNNERS,
    ExperimentArguments,
    ExperimentKind,
    HarnessError,
    ResultRow,
    emit_csv,
    default_series,
    emit_plot_data,
    scaling_exponents,
    scaling_series,
)
from .helpers import HelmholtzError

logger = logging.getLogger(__name__)

COMMANDS: Dict[str, ExperimentKind] = {
    "bench-operator": ExperimentKind.OPERATOR,
    "bench-solver": ExperimentKind.SOLVER,
    "bench-scaling": ExperimentKind.ELEMENT_SCALING,
    "solve": ExperimentKind.SOLVE,
}

# (x, y) columns of the plot data files
PLOTS: Dict[ExperimentKind, List[Tuple[str, str]]] = {
    ExperimentKind.OPERATOR: [("p", "time"), ("p", "setup_time")],
    ExperimentKind.SOLVER: [("p", "iterations"), ("p", "time")],
    ExperimentKind.ELEMENT_SCALING: [("n_e", "iterations"), ("n_e", "time")],
    ExperimentKind.SOLVE: [],
}

# Curves of the plot data, element scaling runs over n_e within one curve
SERIES: Dict[ExperimentKind, Callable[[ResultRow], str]] = {
    ExperimentKind.OPERATOR: default_series,
    ExperimentKind.SOLVER: default_series,
    ExperimentKind.ELEMENT_SCALING: scaling_series,
    ExperimentKind.SOLVE: default_series,
}


def usage() -> str:
    return f"usage: helmholtz {{{','.join(COMMANDS)}}} [flags] (--help per command)"


def summary(kind: ExperimentKind, rows: List[ResultRow]) -> None:
    for row in rows:
        if kind == ExperimentKind.OPERATOR:
            print(
                f"{row.variant:>4} p={row.p:<3} n_e={row.n_e:<6} lambda={row.lam:<8.4g}"
                f" setup={row.setup_time:.3e}s apply={row.time:.3e}s"
                f" primary={row.primary_mults} condensed={row.condensed_mults}"
                f" {row.note}".rstrip()
            )
        else:
            print(
                f"{row.variant:>3} p={row.p:<3} n_e={row.n_e:<6} alpha={row.alpha:<5g}"
                f" iterations={row.iterations:<6} time={row.time:.3e}s"
                f" error={row.max_error:.3e} {row.note}".rstrip()
            )

    if kind == ExperimentKind.ELEMENT_SCALING:
        for name, (iterations, runtime) in scaling_exponents(rows).items():
            print(f"{name}: iterations ~ n_e^{iterations:.3f}, time ~ n_e^{runtime:.3f}")


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv

    if not argv or argv[0] in ("-h", "--help"):
        print(usage())
        return 0 if argv else 1

    command, opts = argv[0], argv[1:]

    if command not in COMMANDS:
        print(f"unknown command {command}\n{usage()}", file=sys.stderr)
        return 1

    kind = COMMANDS[command]

    args = schema.load(
        ExperimentArguments,
        f"helmholtz {command}",
        config_id="helmholtz",
        config_file_name="helmholtz.ini",
        section_name=command,
        alias=True,
        opts=opts,
        prog=f"helmholtz {command}",
    )

    logging.basicConfig(
        level=args.log_level.upper(),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )

    try:
        spec = args.to_spec(kind)
    except ValidationError as err:
        for error in err.errors():
            print(error.get("msg"), file=sys.stderr)
        return 1

    try:
        rows = RUNNERS[kind](spec)
        path = emit_csv(rows, spec.out / f"{kind.value}.csv")

        for x, y in PLOTS[kind]:
            emit_plot_data(
                rows, spec.out, f"{kind.value}_{y}", x=x, y=y, series=SERIES[kind]
            )
    except HarnessError as err:
        print(err, file=sys.stderr)
        return 1
    except HelmholtzError as err:
        logger.error("%s failed: %s", command, err)
        return 1

    summary(kind, rows)
    logger.info("results in %s", path)

    return 0


if __name__ == "__main__":
    sys.exit(main())
