"""Flag Littlewood-Paley analysis: coefficients, square functions, inversion.

``analyze`` produces one coefficient field per scale pair plus a coarse
remainder carrying the low-pass band (applied through the square root of
the residual window so that the energy identity is exact).  The coarse
channel never enters the square functions; its mass is reported separately.

Flag dyadic rectangles couple the two factors: the first-factor cube I has
side 2^-j while the second-factor cube J has the dyadic snap of
2^-k + 2^-j, i.e. side 2^-min(j,k).  Suprema over rectangles are taken
over sampled points, with the second-factor tile dilated by one neighbor
on each side so the sampled supremum dominates the un-snapped rectangle.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .filters import FilterBank, bank_from_descriptor, flag_kernel_spectrum, scale_lengths
from .grid import Grid, GridError, SampledFunction, TAG_BASE, lp_norm
from .storage import read_function, read_json, write_function, write_json


# ---------------------------------------------------------------------------
# dyadic tiling helpers
# ---------------------------------------------------------------------------


def block_reduce(arr: np.ndarray, blocks: list[int], op: str) -> np.ndarray:
    """Reduce disjoint per-axis blocks by max or sum."""
    shape: list[int] = []
    red_axes: list[int] = []
    for i, (size, b) in enumerate(zip(arr.shape, blocks)):
        shape += [size // b, b]
        red_axes.append(2 * i + 1)
    view = arr.reshape(shape)
    if op == "max":
        return view.max(axis=tuple(red_axes))
    if op == "sum":
        return view.sum(axis=tuple(red_axes))
    raise ValueError(op)


def upsample(arr: np.ndarray, blocks: list[int]) -> np.ndarray:
    """Inverse of :func:`block_reduce`: repeat each tile value over its block."""
    out = arr
    for ax, b in enumerate(blocks):
        if b > 1:
            out = np.repeat(out, b, axis=ax)
    return out


def rect_blocks(grid: Grid, sp: tuple[int, int]) -> list[int]:
    """Cells per axis of the flag rectangle tiling at a scale pair."""
    j, k = sp
    q = min(j, k)
    ci = grid.samples >> j
    cj = grid.samples >> q
    return [ci] * grid.n + [cj] * grid.m


@dataclass(frozen=True)
class FlagRectangle:
    """Dyadic rectangle I x J with flag-coupled side lengths."""

    grid: Grid
    sp: tuple[int, int]
    i_index: tuple[int, ...]
    j_index: tuple[int, ...]

    def __post_init__(self):
        j, k = self.sp
        q = min(j, k)
        if len(self.i_index) != self.grid.n or len(self.j_index) != self.grid.m:
            raise GridError("lattice index arity does not match grid factors")
        if not all(0 <= t < (1 << j) for t in self.i_index):
            raise GridError(f"I index {self.i_index} outside lattice of 2^{j} tiles")
        if not all(0 <= t < (1 << q) for t in self.j_index):
            raise GridError(f"J index {self.j_index} outside lattice of 2^{q} tiles")

    @property
    def lengths(self) -> dict[str, float]:
        return scale_lengths(self.grid, self.sp)

    @property
    def side_i(self) -> float:
        return self.lengths["l_i"]

    @property
    def side_j(self) -> float:
        return self.lengths["l_j_snap"]

    @property
    def measure(self) -> float:
        """Measure of I x J (snapped sides)."""
        return self.lengths["measure_rect"]

    @property
    def center_i(self) -> tuple[float, ...]:
        return tuple((t + 0.5) * self.side_i for t in self.i_index)

    @property
    def center_j(self) -> tuple[float, ...]:
        return tuple((t + 0.5) * self.side_j for t in self.j_index)

    def slices(self) -> tuple[slice, ...]:
        j, k = self.sp
        q = min(j, k)
        ci = self.grid.samples >> j
        cj = self.grid.samples >> q
        sl = [slice(t * ci, (t + 1) * ci) for t in self.i_index]
        sl += [slice(t * cj, (t + 1) * cj) for t in self.j_index]
        return tuple(sl)

    def mask(self) -> np.ndarray:
        out = np.zeros(self.grid.shape, dtype=bool)
        out[self.slices()] = True
        return out

    def cell_count(self) -> int:
        j, k = self.sp
        q = min(j, k)
        return (self.grid.samples >> j) ** self.grid.n * (self.grid.samples >> q) ** self.grid.m


def rectangles_at(grid: Grid, sp: tuple[int, int]):
    """All flag rectangles of one scale pair, in lattice order."""
    j, k = sp
    q = min(j, k)
    i_ranges = [range(1 << j)] * grid.n
    j_ranges = [range(1 << q)] * grid.m
    from itertools import product

    for idx in product(*i_ranges):
        for jdx in product(*j_ranges):
            yield FlagRectangle(grid, sp, idx, jdx)


# ---------------------------------------------------------------------------
# analysis / synthesis
# ---------------------------------------------------------------------------


@dataclass
class FlagCoefficients:
    """Family {psi_jk * f} over the bank's scale-pair lattice plus coarse rest."""

    bank: FilterBank
    coeffs: dict[tuple[int, int], SampledFunction]
    coarse: SampledFunction

    @property
    def grid(self) -> Grid:
        return self.bank.grid

    def scale_pairs(self) -> list[tuple[int, int]]:
        return self.bank.scale_pairs


def analyze(f: SampledFunction, bank: FilterBank) -> FlagCoefficients:
    """Convolve f with every flag kernel (spectrally) and the low-pass root."""
    if f.grid != bank.grid or f.tag != TAG_BASE:
        raise GridError("signal grid does not match the bank grid")
    grid = bank.grid
    fhat = np.fft.fftn(f.values)
    coeffs = {}
    for sp in bank.scale_pairs:
        w = flag_kernel_spectrum(bank, sp)
        coeffs[sp] = SampledFunction(grid, np.fft.ifftn(fhat * w))
    root = np.sqrt(bank.lowpass_total())
    coarse = SampledFunction(grid, np.fft.ifftn(fhat * root))
    return FlagCoefficients(bank=bank, coeffs=coeffs, coarse=coarse)


def reconstruct(c: FlagCoefficients) -> SampledFunction:
    """Calderon inversion: convolve each coefficient with its kernel again."""
    grid = c.grid
    acc = np.zeros(grid.shape, dtype=np.complex128)
    for sp, coeff in c.coeffs.items():
        w = flag_kernel_spectrum(c.bank, sp)
        acc += np.fft.fftn(coeff.values) * w
    acc += np.fft.fftn(c.coarse.values) * np.sqrt(c.bank.lowpass_total())
    return SampledFunction(grid, np.fft.ifftn(acc))


def square_function(c: FlagCoefficients) -> SampledFunction:
    """Pointwise l2 aggregate over scale pairs (coarse excluded)."""
    acc = np.zeros(c.grid.shape, dtype=float)
    for coeff in c.coeffs.values():
        acc += np.abs(coeff.values) ** 2
    return SampledFunction(c.grid, np.sqrt(acc).astype(np.complex128))


def maximal_square_function(c: FlagCoefficients) -> SampledFunction:
    """Square function with each coefficient replaced by its rectangle supremum.

    The supremum at a sample is taken over the flag rectangle containing
    it, extended by one snapped tile on each side along the second factor
    (periodic), so it dominates the supremum over the un-snapped rectangle.
    """
    grid = c.grid
    acc = np.zeros(grid.shape, dtype=float)
    for sp, coeff in c.coeffs.items():
        blocks = rect_blocks(grid, sp)
        t = block_reduce(np.abs(coeff.values), blocks, "max")
        for ax in range(grid.n, grid.n + grid.m):
            t = np.maximum(np.maximum(t, np.roll(t, 1, axis=ax)), np.roll(t, -1, axis=ax))
        acc += upsample(t, blocks) ** 2
    return SampledFunction(grid, np.sqrt(acc).astype(np.complex128))


def hp_norm(f: SampledFunction, bank: FilterBank, p: float) -> float:
    """Flag Hardy norm ||g_F(f)||_p for p in (0,1]; p=2 is the energy sanity mode."""
    if not (0 < p <= 1 or p == 2):
        raise ValueError(f"exponent must be in (0,1] (or 2 for the sanity mode), got {p}")
    return lp_norm(square_function(analyze(f, bank)), p)


def coarse_mass(c: FlagCoefficients) -> float:
    return lp_norm(c.coarse, 2.0)


def flag_project(f: SampledFunction, bank: FilterBank) -> SampledFunction:
    """Remove the band the bank routes to the coarse channel.

    Zeroes the spectrum wherever the low-pass residual is positive; the
    result analyzes with exactly zero coarse remainder, which is what the
    p=2 energy identity requires of test signals.
    """
    keep = bank.lowpass_total() == 0.0
    fhat = np.fft.fftn(f.values) * keep
    return f.copy_with(np.fft.ifftn(fhat))


# ---------------------------------------------------------------------------
# coefficient dumps
# ---------------------------------------------------------------------------


def save_coefficients(c: FlagCoefficients, out_dir) -> None:
    """One binary per scale pair in j_<j>/k_<k>.bin plus a manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    for (j, k), coeff in sorted(c.coeffs.items()):
        sub = out / f"j_{j}"
        sub.mkdir(exist_ok=True)
        rel = f"j_{j}/k_{k}.bin"
        write_function(out / rel, coeff)
        files[f"{j},{k}"] = rel
    write_function(out / "coarse.bin", c.coarse)
    write_json(
        out / "manifest.json",
        {"format": "flaghardy-coefficients", "bank": c.bank.descriptor(), "files": files, "coarse": "coarse.bin"},
    )


def load_coefficients(out_dir) -> FlagCoefficients:
    out = Path(out_dir)
    manifest = read_json(out / "manifest.json")
    bank = bank_from_descriptor(manifest["bank"])
    coeffs = {}
    for key, rel in manifest["files"].items():
        j, k = (int(t) for t in key.split(","))
        coeffs[(j, k)] = read_function(out / rel)
    coarse = read_function(out / manifest["coarse"])
    return FlagCoefficients(bank=bank, coeffs=coeffs, coarse=coarse)
