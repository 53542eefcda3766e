"""L2-bounded Fourier multiplier operators applied to atoms and signals.

Operators are restricted to frequency multipliers: they include the
motivating Marcinkiewicz-type flag symbol and are exactly applicable on
the grid, with sup|symbol| as the L2 bound witness.  Symbol values at the
singular frequency set are fixed to 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .atoms import AtomicDecomposition
from .grid import Grid, GridError, SampledFunction, lp_norm
from .storage import read_function, read_json, write_function, write_json
from .transform import hp_norm

MULTIPLIER_KINDS = ("identity", "marcinkiewicz-flag", "riesz-like", "custom")


class OperatorError(ValueError):
    """Symbol not finite or incompatible with the grid."""


@dataclass(frozen=True)
class MultiplierOperator:
    symbol: np.ndarray
    kind: str
    params: dict
    l2_norm: float

    @property
    def is_identity(self) -> bool:
        return self.kind == "identity"


def build_multiplier(kind: str, params: dict | None, grid: Grid) -> MultiplierOperator:
    """Concrete multiplier instances; the flag symbol is |k2|^2/(|k1|^2+|k2|^2)."""
    params = dict(params or {})
    if kind not in MULTIPLIER_KINDS:
        raise OperatorError(f"unknown multiplier kind {kind!r}")
    if kind == "identity":
        symbol = np.ones(grid.shape)
    elif kind == "custom":
        symbol = np.asarray(params.pop("symbol"), dtype=np.complex128)
        if symbol.shape != grid.shape:
            raise OperatorError(f"custom symbol shape {symbol.shape} != grid {grid.shape}")
    else:
        sq1 = np.zeros((1,) * grid.dim)
        sq2 = np.zeros((1,) * grid.dim)
        mesh = grid.freq_mesh()
        for ax, arr in enumerate(mesh):
            if ax < grid.n:
                sq1 = sq1 + arr.astype(float) ** 2
            else:
                sq2 = sq2 + arr.astype(float) ** 2
        denom = sq1 + sq2
        with np.errstate(invalid="ignore", divide="ignore"):
            if kind == "marcinkiewicz-flag":
                symbol = np.where(denom > 0, sq2 / np.where(denom > 0, denom, 1.0), 0.0)
            else:  # riesz-like: odd first component of the second factor
                k2_first = mesh[grid.n].astype(float)
                symbol = np.where(denom > 0, k2_first / np.sqrt(np.where(denom > 0, denom, 1.0)), 0.0)
                symbol = symbol * np.ones(grid.shape)
    if not np.all(np.isfinite(np.asarray(symbol, dtype=np.complex128).view(np.float64))):
        raise OperatorError("symbol contains non-finite values")
    symbol = np.broadcast_to(np.asarray(symbol), grid.shape).copy()
    return MultiplierOperator(symbol=symbol, kind=kind, params=params, l2_norm=float(np.max(np.abs(symbol))))


def apply(op: MultiplierOperator, f: SampledFunction) -> SampledFunction:
    """Inverse transform of symbol * fhat; identity short-circuits bitwise."""
    if op.symbol.shape != f.values.shape:
        raise GridError("operator symbol does not match the signal grid")
    if np.all(op.symbol == 1.0):
        return f.copy_with(f.values.copy())
    return f.copy_with(np.fft.ifftn(op.symbol * np.fft.fftn(f.values)))


def compose_symbols(a: MultiplierOperator, b: MultiplierOperator) -> MultiplierOperator:
    symbol = a.symbol * b.symbol
    return MultiplierOperator(symbol=symbol, kind="custom", params={}, l2_norm=float(np.max(np.abs(symbol))))


def uniform_atom_test(op: MultiplierOperator, decompositions: list[AtomicDecomposition], p: float) -> dict:
    """sup over atoms of ||Ta||_p and ||Ta||_{H^p_F}, plus the per-atom table."""
    rows = []
    sup_lp = 0.0
    sup_hp = 0.0
    for d_idx, dec in enumerate(decompositions):
        bank = dec.bank
        for a_idx, atom in enumerate(dec.atoms):
            ta = apply(op, atom.values)
            nlp = lp_norm(ta, p)
            nhp = hp_norm(ta, bank, p)
            sup_lp = max(sup_lp, nlp)
            sup_hp = max(sup_hp, nhp)
            rows.append(
                {
                    "decomposition": d_idx,
                    "atom": a_idx,
                    "level": atom.level,
                    "lambda": atom.lam,
                    "Ta_lp": nlp,
                    "Ta_hp": nhp,
                }
            )
    return {"p": p, "sup_atom_lp": sup_lp, "sup_atom_hp": sup_hp, "atoms": rows}


def transfer_check(op: MultiplierOperator, f: SampledFunction, p: float, dec: AtomicDecomposition) -> float:
    """||T(sum lambda_i a_i)||_p^p over sum lambda_i^p ||T a_i||_p^p.

    The p-triangle inequality for p <= 1 makes this <= 1 exactly on finite
    sums; f itself is only used for the zero-signal convention.
    """
    if not dec.atoms:
        return 0.0
    if lp_norm(f, 2.0) == 0.0:
        return 0.0
    acc = np.zeros(f.values.shape, dtype=np.complex128)
    denom = 0.0
    for atom in dec.atoms:
        ta = apply(op, atom.values)
        denom += atom.lam**p * lp_norm(ta, p) ** p
        acc += atom.lam * ta.values
    num = lp_norm(SampledFunction(f.grid, acc), p) ** p
    if denom == 0.0:
        return 0.0 if num == 0.0 else float("inf")
    return num / denom


def marcinkiewicz_regularity(op: MultiplierOperator, grid: Grid, max_order: int = 2) -> dict:
    """Numerical check of flag-type dyadic derivative bounds of the symbol.

    Measures sup over grid frequencies away from the singular set of
    |k2|^q |D_q symbol| for finite differences D_q in the second-factor
    frequencies and |k|^q |D_q| in the first, q <= max_order.
    """
    sym = op.symbol
    mesh = grid.freq_mesh()
    r2 = np.zeros((1,) * grid.dim)
    for ax in range(grid.n, grid.dim):
        r2 = r2 + mesh[ax].astype(float) ** 2
    r2 = np.sqrt(r2)
    r_all = grid.freq_radial()
    out = {}
    for q in range(1, max_order + 1):
        worst1 = 0.0
        worst2 = 0.0
        for ax in range(grid.dim):
            d = sym
            for _ in range(q):
                d = (np.roll(d, -1, axis=ax) - np.roll(d, 1, axis=ax)) / 2.0
            scale = r_all if ax < grid.n else np.broadcast_to(r2, grid.shape)
            ratio = np.abs(d) * scale**q
            mask = (r2 > 2) & (r_all > 2)
            val = float(np.max(ratio[np.broadcast_to(mask, grid.shape)]))
            if ax < grid.n:
                worst1 = max(worst1, val)
            else:
                worst2 = max(worst2, val)
        out[q] = {"first_factor": worst1, "second_factor": worst2}
    return out


def save_symbol(base_path, op: MultiplierOperator, grid: Grid) -> None:
    base = Path(base_path)
    f = SampledFunction(grid, op.symbol.astype(np.complex128))
    write_function(base.with_suffix(".bin"), f, extra={"role": "symbol"})
    write_json(base.with_suffix(".json"), {"kind": op.kind, "params": op.params, "l2_norm": op.l2_norm})


def load_symbol(base_path, grid: Grid) -> MultiplierOperator:
    base = Path(base_path)
    desc = read_json(base.with_suffix(".json"))
    f = read_function(base.with_suffix(".bin"))
    if f.grid != grid:
        raise OperatorError("symbol grid does not match the run grid")
    symbol = f.values
    if not np.all(np.isfinite(symbol.view(np.float64))):
        raise OperatorError("symbol file contains non-finite values")
    return MultiplierOperator(
        symbol=symbol, kind=desc.get("kind", "custom"), params=desc.get("params", {}), l2_norm=float(np.max(np.abs(symbol)))
    )
