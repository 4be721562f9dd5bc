"""Fixed-width histograms with bins centred on integer multiples of the width."""

from __future__ import annotations

import numpy as np


def bin_index(values: np.ndarray, width: float) -> np.ndarray:
    return np.floor(np.asarray(values, dtype=float) / width + 0.5).astype(np.int64)


def histogram_mode(values, width: float, prefer: float | None = None) -> tuple[float, int]:
    """Centre and count of the most populated bin.

    Ties go to the bin whose centre is closest to ``prefer`` (the median of
    ``values`` when not given), then to the smaller centre.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("histogram_mode of an empty sequence")
    if not width > 0:
        raise ValueError(f"bin width must be > 0, got {width}")
    keys, counts = np.unique(bin_index(values, width), return_counts=True)
    best = counts.max()
    tied = keys[counts == best]
    if tied.size > 1:
        target = float(np.median(values)) if prefer is None else prefer
        tied = tied[np.lexsort((tied, np.abs(tied * width - target)))]
    return float(tied[0] * width), int(best)
