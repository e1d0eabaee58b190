"""Python access to the amortized global search core."""

import json

from ._core import (
    InvalidInput,
    dejong_gradient,
    dejong_minima,
    dejong_solve,
    dejong_value,
    derive_seed,
    jacobi_constant,
    load_dataset,
    predict,
    propagate,
)
from . import _core


def parse_config(text: str) -> dict:
    """Parsed INI configuration with defaults filled in."""
    return json.loads(_core.parse_config(text))


def hyperplanes(path: str, alpha: float) -> dict:
    """Time-of-flight plane summary of the records at one alpha."""
    return json.loads(_core.hyperplanes(path, alpha))


__all__ = [
    "InvalidInput",
    "dejong_gradient",
    "dejong_minima",
    "dejong_solve",
    "dejong_value",
    "derive_seed",
    "hyperplanes",
    "jacobi_constant",
    "load_dataset",
    "parse_config",
    "predict",
    "propagate",
]
