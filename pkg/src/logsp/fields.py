"""Reproducible smooth test fields (Gaussian mixtures with analytic closures)."""

from __future__ import annotations

import numpy as np

from .grid import GridFunction, GridSpec, sample_function


def random_smooth_field(spec: GridSpec, rng: np.random.Generator, bumps: int = 3,
                        spread: float = 3.0, widths=(0.7, 1.5),
                        signed: bool = True) -> GridFunction:
    centers = rng.uniform(-spread, spread, size=(bumps, 2))
    sig = rng.uniform(*widths, size=bumps)
    amp = rng.uniform(-1.0, 1.0, size=bumps) if signed else rng.uniform(0.3, 1.0, size=bumps)
    # keep the field clearly nonzero
    amp = np.where(np.abs(amp) < 0.2, np.copysign(0.2, amp), amp)

    def f(x, y):
        out = np.zeros(np.broadcast(x, y).shape)
        for (cx, cy), s, a in zip(centers, sig, amp):
            out = out + a * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2.0 * s * s))
        return out

    return sample_function(spec, f)
