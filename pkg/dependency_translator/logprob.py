"""Log-space probability arithmetic."""

import math
from typing import Iterable

import numpy as np

NEG_INF = float("-inf")


def log(p: float) -> float:
    """Natural log with log(0) = -inf."""
    if p <= 0.0:
        return NEG_INF
    return math.log(p)


def exp(logp: float) -> float:
    if logp == NEG_INF:
        return 0.0
    return math.exp(logp)


def log_sum(values: Iterable[float]) -> float:
    """Stable log(Σ exp(v)); the empty sum is -inf."""
    values = [v for v in values if v != NEG_INF]
    if not values:
        return NEG_INF
    if len(values) == 1:
        return values[0]
    return float(np.logaddexp.reduce(np.asarray(values, dtype=np.float64)))


def log_product(values: Iterable[float]) -> float:
    total = 0.0
    for v in values:
        if v == NEG_INF:
            return NEG_INF
        total += v
    return total
