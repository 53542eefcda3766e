"""Dyadic maximal operators and superlevel sets on the sampled grid.

The strong maximal operator takes, at each sample, the largest average of
|f| over axis-parallel dyadic rectangles containing it; the one-parameter
variant restricts to cubes.  Restricting to the dyadic family keeps the
sweep at O(N^d log^d N); the optional half-shifted family doubles the
alignments per axis.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .grid import Grid, SampledFunction


@dataclass(frozen=True)
class MaximalConfig:
    family: str = "dyadic"  # dyadic | dyadic-shifted
    max_scale_span: int | None = None  # cap on per-axis block exponents

    def __post_init__(self):
        if self.family not in ("dyadic", "dyadic-shifted"):
            raise ValueError(f"unknown rectangle family {self.family!r}")


@dataclass(frozen=True)
class SampledSet:
    """Bitmask over the grid with its measure record."""

    grid: Grid
    mask: np.ndarray

    def __post_init__(self):
        if self.mask.dtype != bool or self.mask.shape != self.grid.shape:
            object.__setattr__(self, "mask", np.asarray(self.mask, dtype=bool).reshape(self.grid.shape))

    @property
    def cell_count(self) -> int:
        return int(np.count_nonzero(self.mask))

    @property
    def measure(self) -> float:
        return self.cell_count * self.grid.cell_volume

    @property
    def is_empty(self) -> bool:
        return not self.mask.any()


def superlevel(f: SampledFunction, t: float) -> SampledSet:
    """Strict superlevel set {f > t} of a real-valued sampled function."""
    return SampledSet(f.grid, f.values.real > t)


def _axis_block_means(a: np.ndarray, axis: int, exponent: int) -> np.ndarray:
    """Means over 2^exponent-cell blocks along one axis, kept at full shape."""
    n = a.shape[axis]
    b = 1 << exponent
    moved = np.moveaxis(a, axis, 0)
    tiles = moved.reshape((n // b, b) + moved.shape[1:]).mean(axis=1)
    out = np.repeat(tiles, b, axis=0)
    return np.moveaxis(out, 0, axis)


def _max_over_family(a: np.ndarray, grid: Grid, cfg: MaximalConfig, exponents) -> np.ndarray:
    spans = [list(range(0, e + 1)) for e in exponents]
    shifted = cfg.family == "dyadic-shifted"
    out = np.zeros_like(a)
    for combo in product(*spans):
        variants = [a]
        for axis, e in enumerate(combo):
            next_variants = []
            for v in variants:
                base = _axis_block_means(v, axis, e) if e else v
                next_variants.append(base)
                if shifted and e:
                    half = 1 << (e - 1)
                    rolled = np.roll(v, half, axis=axis)
                    shifted_mean = _axis_block_means(rolled, axis, e)
                    next_variants.append(np.roll(shifted_mean, -half, axis=axis))
            variants = next_variants
        for v in variants:
            np.maximum(out, v, out=out)
    return out


def strong_maximal(f: SampledFunction, cfg: MaximalConfig = MaximalConfig()) -> SampledFunction:
    """Largest dyadic-rectangle average of |f| containing each sample."""
    grid = f.grid
    a = np.abs(f.values)
    span = grid.L if cfg.max_scale_span is None else min(cfg.max_scale_span, grid.L)
    exponents = [span] * grid.dim
    out = _max_over_family(a, grid, cfg, exponents)
    return SampledFunction(grid, out.astype(np.complex128))


def hl_maximal(f: SampledFunction, cfg: MaximalConfig = MaximalConfig()) -> SampledFunction:
    """Hardy-Littlewood variant: dyadic cubes only."""
    grid = f.grid
    a = np.abs(f.values)
    span = grid.L if cfg.max_scale_span is None else min(cfg.max_scale_span, grid.L)
    shifted = cfg.family == "dyadic-shifted"
    out = np.array(a)
    for e in range(1, span + 1):
        variants = [a]
        for axis in range(grid.dim):
            nxt = []
            for v in variants:
                nxt.append(_axis_block_means(v, axis, e))
                if shifted:
                    half = 1 << (e - 1)
                    rolled = np.roll(v, half, axis=axis)
                    nxt.append(np.roll(_axis_block_means(rolled, axis, e), -half, axis=axis))
            variants = nxt
        for v in variants:
            np.maximum(out, v, out=out)
    return SampledFunction(grid, out.astype(np.complex128))


def enlarge(omega: SampledSet, threshold: float, cfg: MaximalConfig = MaximalConfig()) -> SampledSet:
    """{M_s(indicator of omega) > threshold}; strict inequality as printed."""
    chi = SampledFunction(omega.grid, omega.mask.astype(np.complex128))
    ms = strong_maximal(chi, cfg)
    return superlevel(ms, threshold)
