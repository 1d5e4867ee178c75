"""Deterministic probe points inside a chart box."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

DEFAULT_PROBE_COUNT = 8


class ProbeError(ValueError):
    pass


def quasi_random_probes(box: Sequence[Sequence[float]], count: int, seed: int,
                        admissible: Callable[[tuple[float, ...]], bool] | None = None,
                        max_draws: int = 4096) -> list[tuple[float, ...]]:
    """Scrambled Halton points in ``box``, skipping inadmissible ones."""
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)
    if np.any(hi < lo):
        raise ProbeError("chart box has an upper bound below its lower bound")
    sampler = qmc.Halton(d=len(box), scramble=True, seed=seed)
    out: list[tuple[float, ...]] = []
    drawn = 0
    while len(out) < count:
        if drawn >= max_draws:
            raise ProbeError(f"only {len(out)} admissible probes found in {max_draws} draws")
        batch = sampler.random(max(count, 16))
        drawn += len(batch)
        for row in lo + batch * (hi - lo):
            point = tuple(float(x) for x in row)
            if admissible is None or admissible(point):
                out.append(point)
                if len(out) == count:
                    break
    return out
