"""Constructive atomic decomposition driven by the maximal square function.

Pipeline: superlevel sets Omega_i of g_F^sup at thresholds 2^i, their
strong-maximal enlargements, a stopping-time assignment of flag rectangles
to levels (majority of the rectangle inside Omega_i but not Omega_{i+1}),
particle synthesis per rectangle, and atoms as normalized per-level sums.

The level sweep is capped at ``max_levels`` below the top; everything
below the cap is caught by a bottom level whose superlevel set is the
detected support, so the telescoping reassembly stays exact while the
number of strong-maximal sweeps stays bounded.  The normalization constant
is calibrated per decomposition so the worst atom meets the L2 size bound
with equality.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .filters import FilterBank, flag_kernel_spectrum
from .grid import Grid, SampledFunction, lp_norm
from .maximal import MaximalConfig, SampledSet, enlarge, superlevel
from .storage import write_function, write_json, read_json
from .transform import (
    FlagCoefficients,
    FlagRectangle,
    analyze,
    block_reduce,
    maximal_square_function,
    rect_blocks,
    square_function,
    upsample,
)

UNASSIGNED = np.iinfo(np.int64).min


@dataclass(frozen=True)
class DecompositionConfig:
    """Thresholds of the construction; defaults are the printed constants."""

    enlargement_threshold: float = 1.0 / 100.0
    majority: float = 0.5
    dilation: float = 6.0
    hl_cutoff: float = 0.25
    max_levels: int = 32
    support_leak_tolerance: float = 1e-3
    maximal: MaximalConfig = field(default_factory=MaximalConfig)


@dataclass
class LevelFamily:
    """Superlevel sets Omega_i = {g_F^sup > 2^i} and their enlargements."""

    gsup: SampledFunction
    i_min: int
    i_max: int
    cfg: DecompositionConfig
    support: SampledSet
    _omegas: dict[int, SampledSet] = field(default_factory=dict)
    _tildes: dict[int, SampledSet] = field(default_factory=dict)

    @property
    def i_range(self) -> tuple[int, int]:
        return (self.i_min, self.i_max)

    @property
    def is_empty(self) -> bool:
        return self.support.is_empty

    def omega(self, i: int) -> SampledSet:
        if i > self.i_max:
            return SampledSet(self.gsup.grid, np.zeros(self.gsup.grid.shape, dtype=bool))
        if i < self.i_min:
            return self.support
        if i not in self._omegas:
            self._omegas[i] = superlevel(self.gsup, 2.0**i)
        return self._omegas[i]

    def omega_tilde(self, i: int) -> SampledSet:
        key = max(i, self.i_min - 1)
        if key not in self._tildes:
            self._tildes[key] = enlarge(self.omega(key), self.cfg.enlargement_threshold, self.cfg.maximal)
        return self._tildes[key]


def build_level_family(gsup: SampledFunction, cfg: DecompositionConfig = DecompositionConfig()) -> LevelFamily:
    """Level sets of a nonnegative function at thresholds 2^i.

    The index range is [floor(log2 min+), ceil(log2 max)] clipped to
    ``cfg.max_levels`` below the top; an identically zero input yields an
    empty family.
    """
    vals = gsup.values.real
    if np.any(vals < 0):
        raise ValueError("maximal square function must be nonnegative")
    support = superlevel(gsup, 0.0)
    grid = gsup.grid
    if support.is_empty:
        return LevelFamily(gsup, 0, -1, cfg, support)
    pos = vals[vals > 0]
    i_min = math.floor(math.log2(float(pos.min())))
    i_max = math.ceil(math.log2(float(vals.max())))
    i_min = max(i_min, i_max - cfg.max_levels)
    return LevelFamily(gsup, i_min, i_max, cfg, support)


@dataclass
class RectangleAssignment:
    """Stopping-time families R_i plus per-scale-pair tile maps."""

    grid: Grid
    by_level: dict[int, list[FlagRectangle]]
    level_maps: dict[tuple[int, int], np.ndarray]

    def levels(self) -> list[int]:
        return sorted(self.by_level)

    def rect_count(self) -> int:
        return sum(len(v) for v in self.by_level.values())

    def level_of(self, rect: FlagRectangle) -> int | None:
        lm = self.level_maps[rect.sp]
        v = int(lm[tuple(rect.i_index) + tuple(rect.j_index)])
        return None if v == UNASSIGNED else v


def assign_rectangles(levels: LevelFamily, bank: FilterBank) -> RectangleAssignment:
    """Assign each flag rectangle to the highest level where it has majority.

    Monotonicity of the superlevel sets makes the scan top-down: the first
    level where |R * Omega_i| > |R|/2 holds automatically fails the
    condition at i+1.  One extra level below the stored range (the detected
    support) catches every rectangle the in-range scan misses.
    """
    grid = levels.gsup.grid
    by_level: dict[int, list[FlagRectangle]] = {}
    level_maps: dict[tuple[int, int], np.ndarray] = {}
    scan = list(range(levels.i_max, levels.i_min - 2, -1))
    masks = {i: levels.omega(i).mask for i in scan}
    for sp in bank.scale_pairs:
        blocks = rect_blocks(grid, sp)
        cells = int(np.prod(blocks))
        tile_shape = tuple(s // b for s, b in zip(grid.shape, blocks))
        level_map = np.full(tile_shape, UNASSIGNED, dtype=np.int64)
        remaining = np.ones(tile_shape, dtype=bool)
        for i in scan:
            if not remaining.any():
                break
            counts = block_reduce(masks[i].astype(np.int64), blocks, "sum")
            majority = counts > levels.cfg.majority * cells
            newly = majority & remaining
            if newly.any():
                level_map[newly] = i
                remaining &= ~newly
        level_maps[sp] = level_map
        for i in scan:
            hits = np.argwhere(level_map == i)
            if hits.size == 0:
                continue
            rects = by_level.setdefault(i, [])
            for idx in hits:
                rects.append(
                    FlagRectangle(grid, sp, tuple(int(t) for t in idx[: grid.n]), tuple(int(t) for t in idx[grid.n :]))
                )
    return RectangleAssignment(grid=grid, by_level=by_level, level_maps=level_maps)


def build_particle(c: FlagCoefficients, rect: FlagRectangle) -> SampledFunction:
    """Particle f_R: the rectangle-masked coefficient re-convolved with its kernel."""
    sp = rect.sp
    coeff = c.coeffs[sp]
    masked = coeff.values * rect.mask()
    w = flag_kernel_spectrum(c.bank, sp)
    return SampledFunction(c.grid, np.fft.ifftn(np.fft.fftn(masked) * w))


def level_particle_sum(c: FlagCoefficients, assignment: RectangleAssignment, i: int) -> SampledFunction:
    """Sum of particles of one level, one convolution per scale pair."""
    grid = c.grid
    acc = np.zeros(grid.shape, dtype=np.complex128)
    for sp, level_map in assignment.level_maps.items():
        tiles = level_map == i
        if not tiles.any():
            continue
        blocks = rect_blocks(grid, sp)
        cellmask = upsample(tiles, blocks)
        masked = c.coeffs[sp].values * cellmask
        acc += np.fft.ifftn(np.fft.fftn(masked) * flag_kernel_spectrum(c.bank, sp))
    return SampledFunction(grid, acc)


@dataclass
class Atom:
    """One normalized per-level sum of particles with its bookkeeping."""

    level: int
    lam: float
    values: SampledFunction
    support: SampledSet
    omega_measure: float
    omega_tilde_measure: float
    rects: list[FlagRectangle]
    norm_constant: float

    def particles(self, c: FlagCoefficients):
        """Lazy (rectangle, particle) pairs; arrays are built on demand."""
        for rect in self.rects:
            yield rect, build_particle(c, rect)

    def l2_ratio_tilde(self, p: float) -> float:
        return lp_norm(self.values, 2.0) * self.omega_tilde_measure ** (0.5 - 1.0 / p)

    def l2_ratio_omega(self, p: float) -> float:
        return lp_norm(self.values, 2.0) * self.omega_measure ** (0.5 - 1.0 / p)


@dataclass
class AtomicDecomposition:
    p: float
    atoms: list[Atom]
    coarse_remainder: SampledFunction
    norm_constant: float
    diagnostics: dict
    coefficients: FlagCoefficients
    levels: LevelFamily
    assignment: RectangleAssignment

    @property
    def bank(self) -> FilterBank:
        return self.coefficients.bank

    def reassemble(self) -> SampledFunction:
        acc = np.array(self.coarse_remainder.values)
        for atom in self.atoms:
            acc = acc + atom.lam * atom.values.values
        return SampledFunction(self.coarse_remainder.grid, acc)

    def sum_lambda_p(self) -> float:
        return float(sum(a.lam**self.p for a in self.atoms))


def dilate_mask(mask: np.ndarray, margins: list[int]) -> np.ndarray:
    """Box dilation by per-axis cell margins (periodic), via doubling rolls."""
    out = np.asarray(mask, dtype=bool).copy()
    for ax, margin in enumerate(margins):
        remaining = min(margin, out.shape[ax] // 2)
        step = 1
        while remaining > 0:
            s = min(step, remaining)
            out |= np.roll(out, s, axis=ax)
            out |= np.roll(out, -s, axis=ax)
            remaining -= s
            step *= 2
    return out


def atom_support_leak(atom: Atom, cfg: DecompositionConfig, grid: Grid) -> float:
    """L2 mass fraction of the atom outside its dilated enlarged level set.

    The dilation margin is ``dilation`` kernel widths of the coarsest
    rectangle scale present in the atom, capped at the domain.
    """
    total = lp_norm(atom.values, 2.0)
    if total == 0 or not atom.rects:
        return 0.0
    j_coarsest = min(r.sp[0] for r in atom.rects)
    q_coarsest = min(min(r.sp) for r in atom.rects)
    margin_i = int(round(cfg.dilation)) * (grid.samples >> j_coarsest)
    margin_j = int(round(cfg.dilation)) * (grid.samples >> q_coarsest)
    margins = [margin_i] * grid.n + [margin_j] * grid.m
    dilated = dilate_mask(atom.support.mask, margins)
    outside = np.abs(atom.values.values[~dilated]) ** 2
    return float(np.sqrt(np.sum(outside) * grid.cell_volume) / total)


def _decomposition_core(c: FlagCoefficients, cfg: DecompositionConfig):
    """p-independent part: gsup, level family, assignment, per-level sums."""
    gsup = maximal_square_function(c)
    levels = build_level_family(gsup, cfg)
    if levels.is_empty:
        return gsup, levels, None, {}
    assignment = assign_rectangles(levels, bank=c.bank)
    sums = {i: level_particle_sum(c, assignment, i) for i in assignment.levels()}
    return gsup, levels, assignment, sums


def _coarse_remainder(c: FlagCoefficients) -> SampledFunction:
    root = np.sqrt(c.bank.lowpass_total())
    vals = np.fft.ifftn(np.fft.fftn(c.coarse.values) * root)
    return SampledFunction(c.grid, vals)


def decompose(
    f: SampledFunction,
    bank: FilterBank,
    p: float,
    cfg: DecompositionConfig = DecompositionConfig(),
) -> AtomicDecomposition:
    """Full atomic decomposition of f at exponent p (see module docstring)."""
    return decompose_multi(f, bank, [p], cfg)[p]


def decompose_multi(
    f: SampledFunction,
    bank: FilterBank,
    ps: list[float],
    cfg: DecompositionConfig = DecompositionConfig(),
) -> dict[float, AtomicDecomposition]:
    """Decompositions at several exponents sharing the level/assignment work."""
    for p in ps:
        if not 0 < p <= 1:
            raise ValueError(f"exponent must be in (0,1], got {p}")
    c = analyze(f, bank)
    gsup, levels, assignment, sums = _decomposition_core(c, cfg)
    coarse = _coarse_remainder(c)
    out: dict[float, AtomicDecomposition] = {}
    gf = square_function(c)
    f_norm2 = lp_norm(f, 2.0)

    if assignment is None:
        for p in ps:
            diag = {
                "atom_count": 0,
                "rect_count": 0,
                "sum_lambda_p": 0.0,
                "hp_norm": 0.0,
                "reassembly_residual": _residual(f, coarse.values, f_norm2),
                "coarse_mass": lp_norm(c.coarse, 2.0),
                "unassigned_coefficient_mass": 0.0,
                "enlargement_ratios": {},
                "norm_constant": 1.0,
            }
            out[p] = AtomicDecomposition(p, [], coarse, 1.0, diag, c, levels, RectangleAssignment(c.grid, {}, {}))
        return out

    unassigned_sq = 0.0
    for sp, level_map in assignment.level_maps.items():
        blocks = rect_blocks(c.grid, sp)
        cellmask = upsample(level_map == UNASSIGNED, blocks)
        if cellmask.any():
            unassigned_sq += float(np.sum(np.abs(c.coeffs[sp].values[cellmask]) ** 2) * c.grid.cell_volume)

    level_ids = assignment.levels()
    omega_meas = {i: levels.omega(i).measure for i in level_ids}
    tilde_sets = {i: levels.omega_tilde(i) for i in level_ids}
    u_norms = {i: lp_norm(sums[i], 2.0) for i in level_ids}
    enlargement = {
        i: (tilde_sets[i].measure / omega_meas[i]) if omega_meas[i] > 0 else float("inf") for i in level_ids
    }

    for p in ps:
        weights = {i: 2.0**i * omega_meas[i] ** (1.0 / p) for i in level_ids}
        candidates = [
            u_norms[i] * tilde_sets[i].measure ** (0.5 - 1.0 / p) / weights[i]
            for i in level_ids
            if u_norms[i] > 0 and weights[i] > 0
        ]
        C = 1.0 / max(candidates) if candidates else 1.0
        atoms = []
        acc = np.array(coarse.values)
        for i in level_ids:
            if weights[i] <= 0:
                continue
            lam = weights[i] / C
            a_vals = SampledFunction(c.grid, sums[i].values / lam)
            atoms.append(
                Atom(
                    level=i,
                    lam=lam,
                    values=a_vals,
                    support=tilde_sets[i],
                    omega_measure=omega_meas[i],
                    omega_tilde_measure=tilde_sets[i].measure,
                    rects=assignment.by_level[i],
                    norm_constant=C,
                )
            )
            acc = acc + sums[i].values
        hp = lp_norm(gf, p)
        diag = {
            "atom_count": len(atoms),
            "rect_count": assignment.rect_count(),
            "sum_lambda_p": float(sum(a.lam**p for a in atoms)),
            "hp_norm": hp,
            "reassembly_residual": _residual(f, acc, f_norm2),
            "coarse_mass": lp_norm(c.coarse, 2.0),
            "unassigned_coefficient_mass": math.sqrt(unassigned_sq),
            "enlargement_ratios": {str(i): enlargement[i] for i in level_ids},
            "max_enlargement_ratio": max(enlargement.values()) if enlargement else 0.0,
            "norm_constant": C,
        }
        if hp > 0:
            diag["lambda_ratio"] = diag["sum_lambda_p"] / hp**p
        out[p] = AtomicDecomposition(p, atoms, coarse, C, diag, c, levels, assignment)
    return out


def _residual(f: SampledFunction, reassembled: np.ndarray, f_norm2: float) -> float:
    diff = SampledFunction(f.grid, f.values - reassembled)
    r = lp_norm(diff, 2.0)
    return r / f_norm2 if f_norm2 > 0 else r


def rect_incomparability(r: FlagRectangle, s: FlagRectangle) -> float:
    """Geometric separation factor m(R,S) of two flag rectangles."""
    return incomparability_from_measures(
        r.lengths["measure_i"], r.lengths["measure_j"], s.lengths["measure_i"], s.lengths["measure_j"]
    )


def incomparability_from_measures(i_r: float, j_r: float, i_s: float, j_s: float) -> float:
    return (min(i_r, i_s) * min(j_r, j_s)) / (max(i_r, i_s) * max(j_r, j_s))


# ---------------------------------------------------------------------------
# manifests and artifacts
# ---------------------------------------------------------------------------


def decomposition_manifest(dec: AtomicDecomposition, cfg: DecompositionConfig, extra: dict | None = None) -> dict:
    atoms = []
    for idx, a in enumerate(dec.atoms):
        atoms.append(
            {
                "index": idx,
                "level": a.level,
                "lambda": a.lam,
                "omega_measure": a.omega_measure,
                "omega_tilde_measure": a.omega_tilde_measure,
                "rect_count": len(a.rects),
                "support_leak": atom_support_leak(a, cfg, dec.coarse_remainder.grid),
                "l2_ratio_tilde": a.l2_ratio_tilde(dec.p),
                "l2_ratio_omega": a.l2_ratio_omega(dec.p),
            }
        )
    manifest = {
        "format": "flaghardy-decomposition",
        "p": dec.p,
        "norm_constant": dec.norm_constant,
        "bank": dec.bank.descriptor(),
        "thresholds": {
            "enlargement": cfg.enlargement_threshold,
            "majority": cfg.majority,
            "dilation": cfg.dilation,
            "hl_cutoff": cfg.hl_cutoff,
            "max_levels": cfg.max_levels,
            "maximal_family": cfg.maximal.family,
        },
        "atoms": atoms,
        "diagnostics": dec.diagnostics,
    }
    if extra:
        manifest.update(extra)
    return manifest


def save_decomposition(
    dec: AtomicDecomposition,
    out_dir,
    cfg: DecompositionConfig,
    signal: SampledFunction | None = None,
    particle_samples: int = 4,
    extra: dict | None = None,
) -> Path:
    """Write manifest, atom/coarse binaries, and a few sample particles."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {"coarse": "coarse.bin"}
    write_function(out / "coarse.bin", dec.coarse_remainder)
    if signal is not None:
        write_function(out / "signal.bin", signal)
        files["signal"] = "signal.bin"
    atom_files = []
    for idx, atom in enumerate(dec.atoms):
        rel = f"atom_{idx:03d}.bin"
        write_function(out / rel, atom.values, extra={"level": atom.level, "lambda": atom.lam})
        atom_files.append(rel)
    particle_files = []
    for idx, atom in enumerate(dec.atoms[:particle_samples]):
        if not atom.rects:
            continue
        rect = max(atom.rects, key=lambda r: _rect_coeff_mass(dec.coefficients, r))
        rel = f"particle_{idx:03d}.bin"
        write_function(out / rel, build_particle(dec.coefficients, rect), extra={"sp": list(rect.sp)})
        particle_files.append(rel)
    manifest = decomposition_manifest(dec, cfg, extra)
    manifest["files"] = {**files, "atoms": atom_files, "particles": particle_files}
    write_json(out / "manifest.json", manifest)
    return out / "manifest.json"


def _rect_coeff_mass(c: FlagCoefficients, rect: FlagRectangle) -> float:
    vals = c.coeffs[rect.sp].values[rect.slices()]
    return float(np.sum(np.abs(vals) ** 2) * c.grid.cell_volume)


def check_manifest_artifacts(manifest_path) -> dict:
    """Verify that every file listed by a manifest exists; raise on gaps."""
    from .storage import StorageError

    path = Path(manifest_path)
    manifest = read_json(path)
    base = path.parent
    missing = []
    files = manifest.get("files", {})
    flat = [files.get("coarse"), files.get("signal")]
    flat += files.get("atoms", []) + files.get("particles", [])
    for rel in flat:
        if rel and not (base / rel).exists():
            missing.append(rel)
    if missing:
        raise StorageError(f"missing artifacts referenced by {path}: {missing}")
    return manifest
