import math
from typing import Optional

import pytest
from pydantic import BaseModel, Field, ValidationError, model_validator

from helmholtz import schema
from helmholtz.helpers import (
    ArgumentError,
    HelmholtzError,
    parse_counts,
    parse_domain,
    parse_range,
    parse_real,
    raise_if_more_than_one,
)


class DegreeConfig(BaseModel):
    p: Optional[int] = Field(default=None, description="Single degree")
    p_range: Optional[str] = Field(default=None, description="Degree range")

    @model_validator(mode="after")
    def check_arguments(self) -> "DegreeConfig":
        """At most one of the degree selections"""

        raise_if_more_than_one(self.__dict__, ["p", "p_range"])

        return self


def test_raise_if_more_than_one() -> None:
    """At most one"""

    raise_if_more_than_one({"p": 4, "p_range": None}, ["p", "p_range"])

    with pytest.raises(ArgumentError, match="--p-range"):
        raise_if_more_than_one({"p": 4, "p_range": "2:8"}, ["p", "p_range"])


def test_raise_if_more_than_one_in_validator() -> None:
    """Errors in model validators surface as validation errors"""

    config = schema.load(DegreeConfig, "test", opts=["--p", "4"])
    assert config.p == 4

    with pytest.raises(ValidationError):
        schema.load(
            DegreeConfig,
            "test",
            opts=["--p", "4", "--p-range", "2:8"],
            raise_on_validation_error=True,
        )


def test_argument_error_hierarchy() -> None:
    """Argument errors are package errors and value errors"""

    assert issubclass(ArgumentError, HelmholtzError)
    assert issubclass(ArgumentError, ValueError)


def test_parse_counts() -> None:
    assert parse_counts("8") == (8, 8, 8)
    assert parse_counts("2x3x4") == (2, 3, 4)
    assert parse_counts(" 1X2x1 ") == (1, 2, 1)

    for value in ("2x3", "0x1x1", "axbxc", ""):
        with pytest.raises(ArgumentError):
            parse_counts(value)


def test_parse_range() -> None:
    assert parse_range("2:5") == [2, 3, 4, 5]
    assert parse_range("2:8:2") == [2, 4, 6, 8]
    assert parse_range("4:4") == [4]

    for value in ("2", "5:2", "2:8:0", "a:b", "1:2:3:4"):
        with pytest.raises(ArgumentError):
            parse_range(value)


def test_parse_real() -> None:
    assert parse_real("1.5") == 1.5
    assert parse_real("pi") == math.pi
    assert parse_real("-pi") == -math.pi
    assert parse_real("2pi") == pytest.approx(2 * math.pi)
    assert parse_real("0.5*pi") == pytest.approx(math.pi / 2)

    with pytest.raises(ValueError):
        parse_real("two")


def test_parse_domain() -> None:
    assert parse_domain("0:1") == (0.0, 1.0)
    assert parse_domain("0:2pi") == pytest.approx((0.0, 2 * math.pi))

    for value in ("1:0", "0", "a:b"):
        with pytest.raises(ArgumentError):
            parse_domain(value)
