import math
import re
from typing import Any, Dict, List, Tuple


class HelmholtzError(Exception):
    """Root of all errors raised by the helmholtz package"""


class ArgumentError(HelmholtzError, ValueError):
    pass


def _flags(keys: List[str]) -> str:
    return ", ".join(f"--{key.replace('_', '-')}" for key in keys)


def raise_if_more_than_one(entries: Dict[str, Any], keys: List[str]) -> None:
    """
    Raise ArgumentError if more than one of the specified entries in the
    dictionary has a non false value
    """

    given = [key for key in keys if entries.get(key)]

    if len(given) > 1:
        raise ArgumentError(
            f"At most one of these arguments can be set: {_flags(keys)}. Got: {_flags(given)}"  # noqa: E501
        )


def parse_counts(value: str) -> Tuple[int, int, int]:
    """
    Parse element counts given as N1xN2xN3 (or a single N for a cube)
    """

    parts = [part.strip() for part in value.lower().split("x")]

    try:
        counts = [int(part) for part in parts]
    except ValueError:
        raise ArgumentError(f"Unable to parse element counts `{value}`, expected N1xN2xN3")

    if len(counts) == 1:
        counts = counts * 3

    if len(counts) != 3 or min(counts) < 1:
        raise ArgumentError(f"Element counts must be three positive integers: `{value}`")

    return counts[0], counts[1], counts[2]


def parse_range(value: str) -> List[int]:
    """
    Parse an inclusive integer range A:B (optionally A:B:STEP)
    """

    try:
        bounds = [int(part) for part in value.split(":")]
    except ValueError:
        raise ArgumentError(f"Unable to parse range `{value}`, expected A:B")

    if len(bounds) not in (2, 3):
        raise ArgumentError(f"Unable to parse range `{value}`, expected A:B")

    step = bounds[2] if len(bounds) == 3 else 1

    if step < 1 or bounds[1] < bounds[0]:
        raise ArgumentError(f"Empty range `{value}`")

    return list(range(bounds[0], bounds[1] + 1, step))


def parse_real(value: str) -> float:
    """
    Parse a real number that may be written as a multiple of pi, e.g. "2pi"
    """

    value = value.strip().lower()

    match = re.fullmatch(r"([-+]?[0-9.eE+-]*)\*?pi", value)
    if match:
        factor = match.group(1)
        if factor in ("", "+"):
            return math.pi
        if factor == "-":
            return -math.pi
        return float(factor) * math.pi

    return float(value)


def parse_domain(value: str) -> Tuple[float, float]:
    """
    Parse a cube domain edge LO:HI, e.g. "0:2pi"
    """

    try:
        lo, hi = (parse_real(part) for part in value.split(":"))
    except ValueError:
        raise ArgumentError(f"Unable to parse domain `{value}`, expected LO:HI")

    if not hi > lo:
        raise ArgumentError(f"Domain `{value}` is degenerate")

    return lo, hi
