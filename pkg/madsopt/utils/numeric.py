"""
Numeric helpers shared by the mesh, the queue and the file formats.
"""

import math

import numpy as np


def round_half_away(values: np.ndarray) -> np.ndarray:
    """Round to the nearest integer, ties away from zero."""
    values = np.asarray(values, dtype=float)
    return np.sign(values) * np.floor(np.abs(values) + 0.5)


def format_float(value: float) -> str:
    """
    Shortest decimal text that reads back to the same double.
    
    Infinities are written as `inf` / `-inf` and NaN as `nan`.
    """
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(float(value))


def parse_float(token: str) -> float:
    """Parse a decimal token, mapping `nan` to +inf."""
    value = float(token)
    if math.isnan(value):
        return math.inf
    return value


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the angle between two vectors; 0 when either is null."""
    norm = float(np.linalg.norm(a) * np.linalg.norm(b))
    if norm == 0.0:
        return 0.0
    return float(np.dot(a, b)) / norm
