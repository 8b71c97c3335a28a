"""
Module: log_utils.py
Description: Log-friendly summaries of arrays, codes and bucket maps

Codes are hundreds of floats and label maps are whole images; dumping them
into a log record buries the message. summarize_value replaces large values
with a short description (shape, dtype, range) and leaves small ones alone.

External Dependencies:
- numpy: https://numpy.org/doc/

Sample Input:
>>> summarize_value(np.zeros((480, 640), dtype=np.int32))

Expected Output:
>>> 'ndarray(shape=(480, 640), dtype=int32, min=0, max=0)'

Example Usage:
>>> logger.debug(f"bounds={summarize_value(bounds)}")
"""

from collections.abc import Mapping
from typing import Any

import numpy as np

MAX_STR_LEN = 100
MAX_ITEMS_SHOWN = 10


def _range(values: np.ndarray) -> str:
    if values.size == 0:
        return "empty"
    if values.dtype == bool:
        return f"set={int(values.sum())}"
    return f"min={values.min():.4g}, max={values.max():.4g}"


def summarize_value(value: Any, max_str_len: int = MAX_STR_LEN, max_items: int = MAX_ITEMS_SHOWN) -> Any:
    """
    Shrink a value for logging.

    Arrays (and objects carrying a `values` array, such as image codes) become
    a one-line description. Long strings keep their head and tail. Sequences
    and mappings longer than `max_items` are summarized by length and the
    type of their first element; shorter ones are summarized element-wise.
    """
    if isinstance(value, np.ndarray):
        if value.size <= max_items:
            return value.tolist()
        return f"ndarray(shape={value.shape}, dtype={value.dtype}, {_range(value)})"

    inner = getattr(value, 'values', None)
    if isinstance(inner, np.ndarray):
        return f"{type(value).__name__}({summarize_value(inner, max_str_len, max_items)})"

    if isinstance(value, str):
        if len(value) <= max_str_len:
            return value
        half = max(max_str_len // 2, 1)
        return f"{value[:half]}...{value[-half:]}"

    if isinstance(value, Mapping):
        if len(value) > max_items:
            first = next(iter(value.values()))
            return f"{{{len(value)} items of {type(first).__name__}}}"
        return {k: summarize_value(v, max_str_len, max_items) for k, v in value.items()}

    if isinstance(value, (list, tuple, set)):
        if len(value) > max_items:
            first = next(iter(value))
            return f"[{len(value)} items of {type(first).__name__}]"
        return type(value)(summarize_value(v, max_str_len, max_items) for v in value)

    return value
