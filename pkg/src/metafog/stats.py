"""Latency aggregation helpers: nearest-rank percentiles and the headline ratio."""

from __future__ import annotations

from typing import Sequence


def percentile(sorted_values: Sequence[int], p: float) -> int:
    """Nearest-rank percentile: the value at 1-based index ceil(p/100 * n).

    The input must already be sorted ascending. An empty input is an error,
    never a silent zero.
    """
    n = len(sorted_values)
    if n == 0:
        raise ValueError("percentile of an empty set")
    if not 0 <= p <= 100:
        raise ValueError(f"percentile p={p} outside [0, 100]")
    rank = -int(-p * n // 100)  # ceil(p*n/100) in integer arithmetic
    if rank < 1:
        rank = 1
    return sorted_values[rank - 1]


def latency_reduction(cloud_mean: float, fogedge_mean: float) -> float:
    """(cloud - fogedge) / cloud; negative when fog-edge is worse, never clamped."""
    if cloud_mean <= 0:
        raise ValueError(f"cloud mean must be > 0, got {cloud_mean}")
    return (cloud_mean - fogedge_mean) / cloud_mean
