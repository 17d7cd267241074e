"""
Observation operators: orthogonal L2 projections with certified constants.

Each operator I_H carries a resolution length h(grid) and a dimensionless
constant c1 such that the interpolation estimate

    || (I - I_H) w ||  <=  c1 * h * || grad w ||

holds for every field w. For the Fourier low-pass operator the choice
h = l / (2 pi (K + 1)) makes the estimate hold with c1 = 1 exactly (sharp on
the first excluded axis mode). For cell averaging, c1 = 1/pi is the convex
domain Poincare constant with h the cell diameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import Grid, SpectralField, from_physical, h1_seminorm, l2_norm, to_physical

__all__ = ["FourierLowPass", "CellAverage", "interp_defect_ratio"]


@dataclass(frozen=True)
class FourierLowPass:
    """Retain Fourier modes with max(|j1|, |j2|) <= cutoff (index units)."""

    cutoff: int

    def __post_init__(self) -> None:
        if self.cutoff < 0:
            raise ValueError(f"cutoff must be nonnegative, got {self.cutoff}")

    @property
    def c1(self) -> float:
        return 1.0

    def h(self, grid: Grid) -> float:
        return grid.l / (2.0 * math.pi * (self.cutoff + 1))

    def mask(self, grid: Grid) -> np.ndarray:
        return (np.abs(grid.jx) <= self.cutoff) & (np.abs(grid.jy) <= self.cutoff)

    def project(self, w: SpectralField) -> SpectralField:
        return SpectralField(w.grid, w.coeffs * self.mask(w.grid))


@dataclass(frozen=True)
class CellAverage:
    """L2 projection onto fields constant on an m x m grid of square cells."""

    m: int

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError(f"cell count must be positive, got {self.m}")

    @property
    def c1(self) -> float:
        return 1.0 / math.pi

    def h(self, grid: Grid) -> float:
        # Cell diameter.
        return grid.l * math.sqrt(2.0) / self.m

    def project(self, w: SpectralField) -> SpectralField:
        n = w.grid.n
        if n % self.m != 0:
            raise ValueError(
                f"incompatible resolution: grid n={n} not divisible by m={self.m}"
            )
        p = n // self.m
        s = to_physical(w)
        block = s.reshape(2, self.m, p, self.m, p).mean(axis=(2, 4))
        full = np.broadcast_to(
            block[:, :, None, :, None], (2, self.m, p, self.m, p)
        ).reshape(2, n, n)
        return from_physical(full, w.grid)


def interp_defect_ratio(op, w: SpectralField) -> float:
    """|| (I - I_H) w || / || grad w ||; must not exceed c1 * h."""
    g = h1_seminorm(w)
    if g <= 0.0:
        raise ValueError("interp_defect_ratio needs a field with nonzero gradient")
    return l2_norm(w - op.project(w)) / g
