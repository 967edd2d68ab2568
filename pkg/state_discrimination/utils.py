from typing import Any, Sequence

import numpy as np


def parse_complex(value: Any) -> complex:
    """Parses an [re, im] pair or a plain real number."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(float(value), 0.0)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        re, im = value
        return complex(float(re), float(im))
    raise ValueError(f"Expected a number or an [re, im] pair, got {value!r}")


def parse_complex_vector(values: Sequence[Any]) -> np.ndarray:
    if not isinstance(values, (list, tuple)) or len(values) == 0:
        raise ValueError("Vector must be a non-empty list of [re, im] pairs")
    return np.array([parse_complex(v) for v in values], dtype=complex)


def parse_complex_matrix(rows: Sequence[Sequence[Any]]) -> np.ndarray:
    if not isinstance(rows, (list, tuple)) or len(rows) == 0:
        raise ValueError("Matrix must be a non-empty list of rows")
    parsed = [parse_complex_vector(row) for row in rows]
    widths = {len(row) for row in parsed}
    if len(widths) != 1:
        raise ValueError(f"Matrix rows have inconsistent lengths {sorted(widths)}")
    return np.vstack(parsed)


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def max_pairwise_tv(distributions: Sequence[np.ndarray]) -> float:
    worst = 0.0
    for i in range(len(distributions)):
        for j in range(i + 1, len(distributions)):
            worst = max(worst, total_variation(distributions[i], distributions[j]))
    return worst
