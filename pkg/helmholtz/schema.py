#!/usr/bin/env python

"""
Build command line parsers from pydantic models

Every field of the model becomes a --flag (field name with "_" replaced by
"-", or the field alias when alias=True). List fields are given as a single
string split on "," (or the "split" value in json_schema_extra), e.g.

    --p 2,4,8 --alpha 1,1.5,2

Values are layered from experiment files, environment and command line by
helmholtz.config before the model validates them.
"""

import argparse
import re
import sys
from typing import Any, Dict, List, Optional, Tuple, Type, TypeVar, cast

from pydantic import BaseModel, ValidationError

from . import config

DEFAULT_SPLIT = ","

# Map of pydantic schema types to python types
TYPE_MAPPING: Dict[str, type] = {
    "string": str,
    "integer": int,
    "number": float,
    "boolean": bool,
}

# Type of BaseModel Subclasses
BaseModelType = TypeVar("BaseModelType", bound=BaseModel)


class SchemaError(Exception):
    pass


class FieldError(Exception):
    pass


class ArrayInfo(BaseModel):
    array_type: type
    split: str = DEFAULT_SPLIT


Arrays = Dict[str, ArrayInfo]


def escape_split(value: str, split: str = DEFAULT_SPLIT) -> List[str]:
    """
    Helper method to split on specified field
    (unless field is escaped with backslash)
    """

    return [
        re.sub(r"(?<!\\)\\", "", v) for v in re.split(rf"(?<!\\){re.escape(split)}", value)
    ]


def split_list(value: Optional[str], array: ArrayInfo) -> List[Any]:
    """
    Split string into list

    Arguments:
        value: str       - Value to split
        array: ArrayInfo - Config object that specifies the type
                           and the value to split on
    """
    if value is None or not value.strip():
        return []

    # Split by configured split value, unless it is escaped
    return [array.array_type(v.strip()) for v in escape_split(value, array.split)]


def split_arguments(args: argparse.Namespace, arrays: Arrays) -> Dict[str, Any]:
    """
    Loop over argument/values and split list fields by their configured
    split value. Values that already are lists (model defaults) are kept.
    """
    args_with_list_split = {}

    for field, value in vars(args).items():
        if field in arrays and value is not None and not isinstance(value, (set, list)):
            value = split_list(value, arrays[field])

        args_with_list_split[field] = value

    return args_with_list_split


def field_type(field: str, schema: Dict[str, Any], arrays: Arrays) -> type:
    """
    Resolve the argparse type of a pydantic schema field, registering list
    fields in arrays
    """

    # Optional fields are represented with anyOf in pydantic 2:
    # "out": {"anyOf": [{"type": "string"}, {"type": "null"}], ...}
    for types in schema.get("anyOf", []):
        if types.get("type") != "null":
            schema.update(**types)

    if "type" not in schema:
        raise FieldError(
            "No type specified, nested models are not supported: " f"{field}: {schema}"
        )

    if schema["type"] == "array":
        array_type = TYPE_MAPPING.get(schema.get("items", {}).get("type", ""))

        if not array_type:
            raise FieldError(f"Unsupported pydantic type for array field {field}: {schema}")

        arrays[field] = ArrayInfo(
            array_type=array_type,
            split=schema.get("split", DEFAULT_SPLIT),
        )

        # Lists are parsed as str and split later
        return str

    if schema["type"] not in TYPE_MAPPING:
        raise FieldError(f"Unsupported pydantic type for field {field}: {schema}")

    return TYPE_MAPPING[schema["type"]]


def build_parser(
    fields: Dict[str, Dict[str, Any]],
    description: str,
    epilog: Optional[str],
    prog: Optional[str] = None,
) -> Tuple[argparse.ArgumentParser, Arrays]:
    """
    Build argument parser based on pydantic fields

    Return ArgumentParser and fields that are defined as arrays
    """

    # Map of all fields that are defined as arrays
    arrays: Arrays = {}

    parser = argparse.ArgumentParser(
        prog=prog,
        description=description,
        epilog=epilog,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )

    for field, schema in fields.items():
        ftype = field_type(field, schema, arrays)
        default = schema.get("default")

        if field in arrays and isinstance(default, list):
            default = DEFAULT_SPLIT.join(str(v) for v in default)

        parser_args: Dict[str, Any] = {}

        if ftype == bool:
            if default in (False, None):
                parser_args["action"] = "store_true"
                default = False
            elif default is True:
                parser_args["action"] = "store_false"
            else:
                raise FieldError(
                    f"bools only support defaults of False/None/True {field}: {schema}"
                )
        else:
            parser_args = {"type": ftype}

        parser.add_argument(
            f"--{field.replace('_', '-')}",
            dest=field,
            help=schema.get("description", "No help provided"),
            default=default,
            **parser_args,
        )

    return parser, arrays


def load(
    model: Type[BaseModelType],
    description: str,
    config_id: Optional[str] = None,
    config_file_name: Optional[str] = None,
    section_name: Optional[str] = None,
    alias: bool = False,
    opts: Optional[List[str]] = None,
    raise_on_validation_error: bool = False,
    epilog: Optional[str] = None,
    prog: Optional[str] = None,
) -> BaseModelType:
    """

    Load experiment settings as derived from pydantic model

    Arguments:

        model: BaseModelType            - Pydantic Model
        description: str                - Argparse description to show on --help
        config_id                       - config id (directory under ~/.config)
        config_file_name                - experiment file name
        section_name: str               - section of the experiment file
                                          (the sub-command)
        alias: bool                     - Use alias for pydantic schema
        opts: Optional[List[str]]       - Options to parse instead of sys.argv
        raise_on_validation_error: bool - Reraise validation errors from pydantic
        epilog: str                     - Add epilog text to --help output
        prog: str                       - Program name shown in --help

    Returns parsed model

    """

    fields = model.model_json_schema(by_alias=alias).get("properties")

    if not fields:
        raise SchemaError(f"Unable to get properties from schema {model}")

    parser, arrays = build_parser(fields, description, epilog, prog)

    args = split_arguments(
        args=config.handle_args(parser, config_id, config_file_name, section_name, opts=opts),
        arrays=arrays,
    )

    # Unset optional values are left to the model defaults
    args = {key: value for key, value in args.items() if value is not None}

    try:
        return cast(BaseModelType, model(**args))
    except ValidationError as e:
        if raise_on_validation_error:
            raise

        for error in e.errors():
            loc = error.get("loc", [])
            argument = str(loc[0]).replace("_", "-") if loc else "arguments"
            msg = error.get("msg")

            print(f"{msg} for --{argument}\n")

        parser.print_help()
        sys.exit(1)
