"""Verification of the atom definition clause by clause.

Particles are lifted to three variable groups.  With indices compared
directly (sharp when k >= j, ties sharp), the sharp lift places the
first-factor kernel's second slot on the new x3 axes,

    a_R^#(x1, x3; x2) = norm * sum_{y in R} f_jk(y) psi1_j(x1-y1, x3) psi2_k(x2-y2),

and the tilde lift keeps psi1 in (x1, x2) with the second-factor kernel's
profile on x3.  Array axis order follows the written argument order:
sharp (x1[n], x3[m], x2[m]), tilde (x1[n], x2[m], x3[m]).

Checked here: the marginalization identity back to the particle, the
two-group moment cancellation, the size constant d_R with its
finite-difference smoothness budgets, the per-atom sum bound on
d_R^2 |R| |hat I_R|^2, and the square-function bound of each atom.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from itertools import product

import numpy as np

from .atoms import Atom, AtomicDecomposition, DecompositionConfig
from .filters import FilterBank, lift_constants, scale_lengths
from .grid import Grid, SampledFunction, TAG_LIFTED, lp_norm
from .transform import FlagCoefficients, FlagRectangle, block_reduce, hp_norm, rect_blocks


def branch_of(sp: tuple[int, int]) -> str:
    j, k = sp
    return "sharp" if k >= j else "tilde"


@dataclass
class LiftedParticle:
    """Pseudo-product lift of one particle with its measured size constant."""

    rect: FlagRectangle
    branch: str
    values: SampledFunction
    normalization: float
    coeff_mass_sq: float
    d_r: float
    a_hat: float
    hat_i: dict
    tilde_i: dict

    @property
    def grid(self) -> Grid:
        return self.rect.grid

    def axis_groups(self) -> dict[str, list[int]]:
        """Lifted-array axes per variable group, branch aware."""
        g = self.grid
        x1 = list(range(g.n))
        mid = list(range(g.n, g.n + g.m))
        last = list(range(g.n + g.m, g.n + 2 * g.m))
        if self.branch == "sharp":
            return {"x1": x1, "x3": mid, "x2": last}
        return {"x1": x1, "x2": mid, "x3": last}


def _kernel1(bank: FilterBank, j: int) -> np.ndarray:
    g = bank.grid
    return np.fft.ifftn(bank.psi1_hat[j].astype(np.complex128)) / g.cell ** (g.n + g.m)


def _kernel2(bank: FilterBank, k: int) -> np.ndarray:
    g = bank.grid
    return np.fft.ifftn(bank.psi2_hat[k].astype(np.complex128)) / g.cell**g.m


def lift_particle(
    c: FlagCoefficients,
    rect: FlagRectangle,
    normalization: float = 1.0,
    a_hat: float | None = None,
) -> LiftedParticle:
    """Build the lifted particle of a rectangle at the given normalization.

    The x3 axes keep the full period so the discrete marginalization back
    to the particle is exact; restrict only in post-processing if memory
    dictates.
    """
    g = c.grid
    bank = c.bank
    j, k = rect.sp
    branch = branch_of(rect.sp)
    n, m = g.n, g.m
    N = g.samples
    masked = c.coeffs[rect.sp].values * rect.mask()
    coeff_mass_sq = float(np.sum(np.abs(masked) ** 2) * g.cell_volume)
    mhat = np.fft.fftn(masked)

    if branch == "sharp":
        p1 = _kernel1(bank, j)
        gpart = np.fft.fftn(p1, axes=tuple(range(n)))  # (kappa1[n], x3[m])
        p2hat = np.fft.fftn(_kernel2(bank, k))  # (kappa2[m])
        t = (
            mhat.reshape((N,) * n + (1,) * m + (N,) * m)
            * gpart.reshape((N,) * n + (N,) * m + (1,) * m)
            * p2hat.reshape((1,) * (n + m) + (N,) * m)
        )
        conv_axes = tuple(range(n)) + tuple(range(n + m, n + 2 * m))
        vals = np.fft.ifftn(t, axes=conv_axes) * g.cell ** (n + m) * normalization
    else:
        conv1 = np.fft.ifftn(mhat * bank.psi1_hat[j])  # (x1[n], x2[m])
        p2 = _kernel2(bank, k)
        vals = (
            conv1.reshape((N,) * (n + m) + (1,) * m)
            * p2.reshape((1,) * (n + m) + (N,) * m)
            * normalization
        )

    sl = rect.lengths
    if a_hat is None:
        a_hat = lift_constants(bank)["a_hat"]
    d_r = a_hat * abs(normalization) * np.sqrt(sl["measure_rect"] * coeff_mass_sq) / sl["measure_sharp"]
    lifted = SampledFunction(g, vals, tag=TAG_LIFTED)
    hat_i = {"center": (0.0,) * m, "side": sl["l_i"]}
    tilde_i = {"center": rect.center_j, "side": sl["l_i"]}
    return LiftedParticle(
        rect=rect,
        branch=branch,
        values=lifted,
        normalization=normalization,
        coeff_mass_sq=coeff_mass_sq,
        d_r=float(d_r),
        a_hat=float(a_hat),
        hat_i=hat_i,
        tilde_i=tilde_i,
    )


def marginalize(lp: LiftedParticle) -> SampledFunction:
    """Integrate out x3 along the flag direction; returns a base function.

    Sharp: int a(x1, x3; x2 - x3) dx3.  Tilde: int a(x1, x2 - x3; x3) dx3.
    """
    g = lp.grid
    N = g.samples
    groups = lp.axis_groups()
    x3_axes = groups["x3"]
    a = lp.values.values
    # after slicing out the x3 axes, the x2 axes sit at positions n..n+m-1
    roll_axes = list(range(g.n, g.n + g.m))
    acc = np.zeros((N,) * (g.n + g.m), dtype=np.complex128)
    for t in product(range(N), repeat=g.m):
        sel: list = [slice(None)] * a.ndim
        for ax, ti in zip(x3_axes, t):
            sel[ax] = ti
        s = a[tuple(sel)]
        for ax, ti in zip(roll_axes, t):
            s = np.roll(s, ti, axis=ax)
        acc += s
    acc *= g.cell**g.m
    return SampledFunction(g, acc)


def support_boxes(lp: LiftedParticle) -> dict[str, dict]:
    """Reference boxes per axis group for the support-leak measurement.

    The first factor sits in (a dilate of) I_R; the x3 axes carry the
    first-factor kernel's own slot (sharp: width l_i at the origin) or the
    second-factor profile (tilde: width 2^-k at the origin); the x2 axes
    carry the rectangle's second factor.
    """
    sl = lp.rect.lengths
    boxes = {
        "x1": {"center": lp.rect.center_i, "half": sl["l_i"] / 2},
        "x2": {"center": lp.rect.center_j, "half": sl["l_j_snap"] / 2},
    }
    if lp.branch == "sharp":
        boxes["x3"] = {"center": (0.0,) * lp.grid.m, "half": sl["l_i"] / 2}
    else:
        boxes["x3"] = {"center": (0.0,) * lp.grid.m, "half": sl["l_j_pure"] / 2}
    return boxes


def lift_support_leak(lp: LiftedParticle, dilation: float = 6.0) -> float:
    """L2 mass fraction outside the dilation of the reference boxes."""
    g = lp.grid
    a = lp.values.values
    total = np.sum(np.abs(a) ** 2)
    if total == 0:
        return 0.0
    groups = lp.axis_groups()
    boxes = support_boxes(lp)
    inside = np.ones(a.shape, dtype=bool)
    for name, axes in groups.items():
        box = boxes[name]
        half = dilation * box["half"]
        for ax, center in zip(axes, box["center"]):
            xc = np.abs(g.centered_coords(center) - center)
            shape = [1] * a.ndim
            shape[ax] = g.samples
            inside &= (xc <= half).reshape(shape)
    outside_mass = np.sum(np.abs(a[~inside]) ** 2)
    return float(np.sqrt(outside_mass / total))


# ---------------------------------------------------------------------------
# moment cancellation
# ---------------------------------------------------------------------------


def _moment_groups(lp: LiftedParticle) -> list[tuple[str, list[int], list[float]]]:
    groups = lp.axis_groups()
    ci = list(lp.rect.center_i)
    cj = list(lp.rect.center_j)
    zero = [0.0] * lp.grid.m
    if lp.branch == "sharp":
        return [("x1x3", groups["x1"] + groups["x3"], ci + zero), ("x2", groups["x2"], cj)]
    return [("x1x2", groups["x1"] + groups["x2"], ci + cj), ("x3", groups["x3"], zero)]


def check_moments(lp: LiftedParticle, max_order: int = 2) -> dict:
    """Worst normalized moment residual per group and total order.

    Moments are taken over one variable group with the others frozen, about
    the rectangle centers, and normalized by ||a||_oo times the group
    domain volume times (side/2)^order.
    """
    if max_order > 4:
        raise ValueError("moment order capped at 4 (quadrature noise dominates beyond)")
    g = lp.grid
    a = lp.values.values
    sup = np.max(np.abs(a))
    out: dict[str, dict[int, float]] = {}
    if sup == 0:
        for name, _, _ in _moment_groups(lp):
            out[name] = {q: 0.0 for q in range(max_order + 1)}
        return out
    for name, axes, centers in _moment_groups(lp):
        gdim = len(axes)
        vol = g.side**gdim
        per_order: dict[int, float] = {}
        # coordinates unwrapped about the center, range [-side/2, side/2)
        coords = [g.centered_coords(c) - c for c in centers]
        for q in range(max_order + 1):
            worst = 0.0
            for powers in _compositions(q, gdim):
                mono = np.ones((1,) * gdim)
                for local_ax, (pw, xc) in enumerate(zip(powers, coords)):
                    shape = [1] * gdim
                    shape[local_ax] = g.samples
                    mono = mono * (xc**pw).reshape(shape)
                mom = np.tensordot(a, mono, axes=(axes, list(range(gdim)))) * g.cell**gdim
                res = float(np.max(np.abs(mom))) / (sup * vol * (g.side / 2) ** q)
                worst = max(worst, res)
            per_order[q] = worst
        out[name] = per_order
    return out


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


# ---------------------------------------------------------------------------
# size and smoothness constants
# ---------------------------------------------------------------------------


def _fd_derivative(a: np.ndarray, axis: int, order: int, h: float) -> np.ndarray:
    out = a
    for _ in range(order):
        out = (np.roll(out, -1, axis=axis) - np.roll(out, 1, axis=axis)) / (2 * h)
    return out


def measure_dR(lp: LiftedParticle, k_max: int = 2) -> dict:
    """d_R plus the table of derivative sup-norms against their budgets.

    Each budget ratio must be <= 1 up to finite-difference slack: the sup
    bound is ||a||_oo / d_R, and for k <= k_max the centered difference of
    order k*(factor dim) along each axis is compared with d_R over the
    hosting length to that order.
    """
    if k_max > 2:
        raise ValueError("derivative order capped at 2 (finite differences beyond are noise)")
    g = lp.grid
    a = lp.values.values
    sl = lp.rect.lengths
    d_r = lp.d_r
    table: dict[str, float] = {}
    sup = float(np.max(np.abs(a)))
    table["sup_ratio"] = sup / d_r if d_r > 0 else 0.0
    groups = lp.axis_groups()
    # budget length per group: the first-factor kernel's own width l_i for the
    # axes it occupies, the pure second-factor scale for the psi2 axes
    hosting = {
        "x1": (sl["l_i"], g.n),
        "x3": (sl["l_i"] if lp.branch == "sharp" else sl["l_j_pure"], g.m),
        "x2": (sl["l_j_pure"] if lp.branch == "sharp" else sl["l_i"], g.m),
    }
    for name, axes in groups.items():
        length, dim = hosting[name]
        for kk in range(1, k_max + 1):
            q = kk * dim
            worst = 0.0
            for ax in axes:
                der = _fd_derivative(a, ax, q, g.cell)
                worst = max(worst, float(np.max(np.abs(der))))
            budget = d_r / length**q
            table[f"d{q}_{name}_ratio"] = worst / budget if budget > 0 else 0.0
    return {"d_R": d_r, "ratios": table}


def rect_dr(c: FlagCoefficients, rect: FlagRectangle, normalization: float, a_hat: float) -> float:
    """d_R without building the lift (it depends only on the masked mass)."""
    vals = c.coeffs[rect.sp].values[rect.slices()]
    mass_sq = float(np.sum(np.abs(vals) ** 2) * c.grid.cell_volume)
    sl = rect.lengths
    return a_hat * abs(normalization) * np.sqrt(sl["measure_rect"] * mass_sq) / sl["measure_sharp"]


def eq12_constant(dec: AtomicDecomposition, a_hat: float) -> float:
    """Measured constant for the particle-sum bound.

    Composed of the bank's kernel constant (through d_R), the level-set
    enlargement ratio, and the factor from the stopping-time energy count;
    with it the per-atom ratio of :func:`check_dR_sum` is provably <= 1.
    """
    c_norm = dec.norm_constant
    max_enl = dec.diagnostics.get("max_enlargement_ratio", 1.0)
    return 8.0 * (c_norm * a_hat) ** 2 * max_enl ** (2.0 / dec.p)


def check_dR_sum(atom: Atom, dec: AtomicDecomposition, a_sum_constant: float, a_hat: float) -> float:
    """Ratio of sum d_R^2 |R| |hat I_R|^2 over its budget for one atom."""
    if not atom.rects:
        return 0.0
    norm = atom.norm_constant / (2.0**atom.level * atom.omega_measure ** (1.0 / dec.p))
    total = 0.0
    c = dec.coefficients
    by_sp: dict[tuple[int, int], list[FlagRectangle]] = {}
    for r in atom.rects:
        by_sp.setdefault(r.sp, []).append(r)
    for sp, rects in by_sp.items():
        blocks = rect_blocks(c.grid, sp)
        mass = block_reduce(np.abs(c.coeffs[sp].values) ** 2, blocks, "sum") * c.grid.cell_volume
        sl = scale_lengths(c.grid, sp)
        d_sq_per_mass = (a_hat * norm / sl["measure_sharp"]) ** 2 * sl["measure_rect"]
        for r in rects:
            m = float(mass[tuple(r.i_index) + tuple(r.j_index)])
            total += d_sq_per_mass * m * sl["measure_rect"] * sl["measure_hat_i"] ** 2
    denom = a_sum_constant * atom.omega_tilde_measure ** (1.0 - 2.0 / dec.p)
    return total / denom if denom > 0 else 0.0


def check_atom_gf_bound(atom: Atom, bank: FilterBank, p: float) -> float:
    """||g_F(a)||_p of one atom; the corpus-wide sup is tracked by the suite."""
    return hp_norm(atom.values, bank, p)


def atom_geometry_diagnostics(atom: Atom, dec: AtomicDecomposition, cfg: DecompositionConfig) -> dict:
    """Geometric side measurements: the dilated rectangle union and its
    one-parameter maximal cover at the printed cutoff, plus the worst
    incomparability factor among the atom's heaviest rectangles."""
    from .atoms import _rect_coeff_mass, dilate_mask, rect_incomparability
    from .maximal import hl_maximal

    grid = dec.coarse_remainder.grid
    if not atom.rects:
        return {"omega_bar_measure": 0.0, "hl_cover_ratio": 0.0, "incomparability_min": 1.0}
    omega_bar = np.zeros(grid.shape, dtype=bool)
    half_extra = int(round((cfg.dilation - 1.0) / 2.0))
    by_sp: dict[tuple[int, int], list[FlagRectangle]] = {}
    for rect in atom.rects:
        by_sp.setdefault(rect.sp, []).append(rect)
    for sp, rects in by_sp.items():
        blocks = rect_blocks(grid, sp)
        union = np.zeros(grid.shape, dtype=bool)
        for rect in rects:
            union[rect.slices()] = True
        margins = [half_extra * b for b in blocks]
        omega_bar |= dilate_mask(union, margins)
    chi = SampledFunction(grid, omega_bar.astype(np.complex128))
    m_chi = hl_maximal(chi, cfg.maximal).values.real
    cover = float(np.count_nonzero(m_chi >= cfg.hl_cutoff) * grid.cell_volume)
    bar_measure = float(np.count_nonzero(omega_bar) * grid.cell_volume)
    ranked = sorted(atom.rects, key=lambda r: -_rect_coeff_mass(dec.coefficients, r))[:12]
    worst = 1.0
    for i in range(len(ranked)):
        for j in range(i + 1, len(ranked)):
            worst = min(worst, rect_incomparability(ranked[i], ranked[j]))
    return {
        "omega_bar_measure": bar_measure,
        "hl_cover_ratio": cover / bar_measure if bar_measure > 0 else 0.0,
        "incomparability_min": worst,
    }


# ---------------------------------------------------------------------------
# per-atom reports
# ---------------------------------------------------------------------------


@dataclass
class AtomReport:
    atom_index: int
    level: int
    lam: float
    l2_ratio_tilde: float
    l2_ratio_omega: float
    support_leak: float
    dr_sum_ratio: float
    gf_bound: float
    omega_bar_measure: float = 0.0
    hl_cover_ratio: float = 0.0
    incomparability_min: float = 1.0
    moment_residual_max: float | None = None
    marginalization_residual: float | None = None
    derivative_ratio_max: float | None = None
    lift_leak_max: float | None = None

    ROW_FIELDS = (
        "atom_index",
        "level",
        "lam",
        "l2_ratio_tilde",
        "l2_ratio_omega",
        "support_leak",
        "dr_sum_ratio",
        "gf_bound",
        "omega_bar_measure",
        "hl_cover_ratio",
        "incomparability_min",
        "moment_residual_max",
        "marginalization_residual",
        "derivative_ratio_max",
        "lift_leak_max",
    )

    def row(self) -> list:
        return [getattr(self, f) for f in self.ROW_FIELDS]


@dataclass(frozen=True)
class ValidationThresholds:
    l2_ratio: float = 1.0 + 1e-9
    dr_sum_ratio: float = 1.0 + 1e-6
    moment_residual: float = 1e-7
    moment_order: int = 2
    marginalization: float = 1e-8
    derivative_ratio: float = 1.0 + 0.1
    lift_leak: float = 1e-3
    min_lift_samples: int = 20
    # lifts are sampled from scale pairs at least this fine, where the
    # kernels fit inside the period and wrap leakage sits below the moment
    # tolerance; coarser pairs measure the torus seam, not cancellation
    locality_scale: int = 4


def sample_rectangles(
    dec: AtomicDecomposition, count: int, locality_scale: int = 4
) -> list[tuple[int, FlagRectangle]]:
    """Deterministic round-robin of the heaviest qualifying rectangles per atom.

    Rectangles qualify when min(j, k) >= locality_scale (clipped to the
    bank range); both lift branches are forced into the sample when the
    decomposition offers them.
    """
    from .atoms import _rect_coeff_mass

    bank = dec.bank
    floor = min(locality_scale, bank.j_range[1], bank.k_range[1])
    per_atom: list[list[tuple[int, FlagRectangle, float]]] = []
    spare: list[tuple[int, FlagRectangle, float]] = []
    for idx, atom in enumerate(dec.atoms):
        scored = [(idx, r, _rect_coeff_mass(dec.coefficients, r)) for r in atom.rects]
        qualifying = sorted((t for t in scored if min(t[1].sp) >= floor and t[2] > 0), key=lambda t: -t[2])
        if qualifying:
            per_atom.append(qualifying)
            spare.extend(qualifying)
    picked: list[tuple[int, FlagRectangle]] = []
    seen: set[tuple[int, tuple, tuple, tuple]] = set()

    def _push(entry):
        key = (entry[0], entry[1].sp, entry[1].i_index, entry[1].j_index)
        if key not in seen:
            seen.add(key)
            picked.append((entry[0], entry[1]))

    depth = 0
    while len(picked) < count and any(depth < len(r) for r in per_atom):
        for ranked in per_atom:
            if depth < len(ranked):
                _push(ranked[depth])
                if len(picked) >= count:
                    break
        depth += 1
    branches = {branch_of(r.sp) for _, r in picked}
    for want in ("sharp", "tilde"):
        if want not in branches:
            candidates = sorted((t for t in spare if branch_of(t[1].sp) == want), key=lambda t: -t[2])
            if candidates:
                _push(candidates[0])
    return picked


def validate_decomposition(
    dec: AtomicDecomposition,
    cfg: DecompositionConfig = DecompositionConfig(),
    thresholds: ValidationThresholds = ValidationThresholds(),
    lift_samples: int | None = None,
) -> dict:
    """Run every atom check; returns reports, failures, and the constants."""
    from .atoms import atom_support_leak

    bank = dec.bank
    consts = lift_constants(bank)
    a_hat = consts["a_hat"]
    a_sum = eq12_constant(dec, a_hat)
    failures: list[str] = []
    reports: list[AtomReport] = []
    for idx, atom in enumerate(dec.atoms):
        geometry = atom_geometry_diagnostics(atom, dec, cfg)
        r = AtomReport(
            atom_index=idx,
            level=atom.level,
            lam=atom.lam,
            l2_ratio_tilde=atom.l2_ratio_tilde(dec.p),
            l2_ratio_omega=atom.l2_ratio_omega(dec.p),
            support_leak=atom_support_leak(atom, cfg, dec.coarse_remainder.grid),
            dr_sum_ratio=check_dR_sum(atom, dec, a_sum, a_hat),
            gf_bound=check_atom_gf_bound(atom, bank, dec.p),
            **geometry,
        )
        if r.l2_ratio_tilde > thresholds.l2_ratio:
            failures.append(f"atom {idx}: l2 ratio {r.l2_ratio_tilde:.3e} > {thresholds.l2_ratio}")
        if r.dr_sum_ratio > thresholds.dr_sum_ratio:
            failures.append(f"atom {idx}: d_R sum ratio {r.dr_sum_ratio:.3e} > {thresholds.dr_sum_ratio}")
        if r.support_leak > cfg.support_leak_tolerance:
            failures.append(f"atom {idx}: support leak {r.support_leak:.3e} > {cfg.support_leak_tolerance}")
        reports.append(r)

    n_samples = thresholds.min_lift_samples if lift_samples is None else lift_samples
    sampled = sample_rectangles(dec, n_samples, thresholds.locality_scale)
    lift_rows = []
    for atom_idx, rect in sampled:
        atom = dec.atoms[atom_idx]
        norm = atom.norm_constant / (2.0**atom.level * atom.omega_measure ** (1.0 / dec.p))
        lp = lift_particle(dec.coefficients, rect, norm, a_hat=a_hat)
        from .atoms import build_particle

        particle = build_particle(dec.coefficients, rect)
        marg = marginalize(lp)
        pnorm = lp_norm(particle, 2.0)
        marg_res = (
            lp_norm(SampledFunction(marg.grid, marg.values - norm * particle.values), 2.0) / (abs(norm) * pnorm)
            if pnorm > 0
            else 0.0
        )
        moments = check_moments(lp, thresholds.moment_order)
        mom_max = max(v for group in moments.values() for v in group.values())
        smooth = measure_dR(lp)
        der_max = max(v for k, v in smooth["ratios"].items() if k != "sup_ratio")
        leak = lift_support_leak(lp, cfg.dilation)
        lift_rows.append(
            {
                "atom_index": atom_idx,
                "sp": list(rect.sp),
                "branch": lp.branch,
                "moment_residual_max": mom_max,
                "marginalization_residual": marg_res,
                "sup_ratio": smooth["ratios"]["sup_ratio"],
                "derivative_ratio_max": der_max,
                "lift_leak": leak,
                "d_R": lp.d_r,
            }
        )
        rep = reports[atom_idx]
        rep.moment_residual_max = max(rep.moment_residual_max or 0.0, mom_max)
        rep.marginalization_residual = max(rep.marginalization_residual or 0.0, marg_res)
        rep.derivative_ratio_max = max(rep.derivative_ratio_max or 0.0, der_max)
        rep.lift_leak_max = max(rep.lift_leak_max or 0.0, leak)
        if mom_max > thresholds.moment_residual:
            failures.append(f"lift ({atom_idx},{rect.sp}): moment residual {mom_max:.3e}")
        if marg_res > thresholds.marginalization:
            failures.append(f"lift ({atom_idx},{rect.sp}): marginalization residual {marg_res:.3e}")
        if smooth["ratios"]["sup_ratio"] > thresholds.derivative_ratio:
            failures.append(f"lift ({atom_idx},{rect.sp}): sup ratio {smooth['ratios']['sup_ratio']:.3e}")
        if der_max > thresholds.derivative_ratio:
            failures.append(f"lift ({atom_idx},{rect.sp}): derivative ratio {der_max:.3e}")
        if leak > thresholds.lift_leak:
            failures.append(f"lift ({atom_idx},{rect.sp}): support leak {leak:.3e}")

    return {
        "reports": reports,
        "lift_rows": lift_rows,
        "failures": failures,
        "passed": not failures,
        "a_hat": a_hat,
        "a_sum_constant": a_sum,
        "lift_sample_count": len(sampled),
    }


def reports_to_csv(reports: list[AtomReport], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(AtomReport.ROW_FIELDS)
        for r in reports:
            writer.writerow(r.row())
