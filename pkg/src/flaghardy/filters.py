"""Two-factor Littlewood-Paley filter bank with flag kernels.

The bank holds a family psi1_j of radial frequency windows on the full
(n+m)-dimensional grid and a family psi2_k on the m-dimensional second
factor, built so that

    sum_j |psi1_j|^2 + lowpass1 = 1   at every grid frequency,
    sum_k |psi2_k|^2 + lowpass2 = 1   at every grid frequency,

exactly (up to rounding for the smooth profile, identically for the sharp
one).  Windows are squared differences of a scaled cutoff profile, so the
identity telescopes; the top scale uses a closing window that extends to
the Nyquist corners, otherwise no finite family could sum to one on the
discrete frequency grid.

The flag kernel at a scale pair (j, k) is the convolution, in the second
variable, of the two factors; spectrally it is the pointwise product
psi1_j(k1, k2) * psi2_k(k2).

Scale convention: index j means frequency annulus |kappa| ~ 2^j cycles per
period and spatial width ~ side * 2^-j (fine scale = large index).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .grid import Grid, SampledFunction, make_grid

PROFILES = ("meyer-smooth", "shannon-sharp")

# transition endpoints of the cutoff profile, in units of 2^j
C1 = 0.5
C2 = 4.0


class FilterBankError(ValueError):
    """Scale range or profile incompatible with the grid."""


def _meyer_aux(t: np.ndarray) -> np.ndarray:
    t = np.clip(t, 0.0, 1.0)
    return t**4 * (35 - 84 * t + 70 * t**2 - 20 * t**3)


def cutoff_profile(t: np.ndarray, profile: str) -> np.ndarray:
    """Monotone cutoff: 1 for t <= 1, 0 for t >= C2, smooth between."""
    t = np.asarray(t, dtype=float)
    if profile == "shannon-sharp":
        return (t <= 1.0).astype(float)
    if profile == "meyer-smooth":
        s = (t - 1.0) / (C2 - 1.0)
        return np.where(t <= 1.0, 1.0, np.where(t >= C2, 0.0, np.cos(np.pi / 2 * _meyer_aux(s)) ** 2))
    raise FilterBankError(f"unknown profile {profile!r}")


def default_moment_order(n: int, m: int, p_ref: float = 0.5) -> int:
    """Moment-condition order M0 sized for the smallest supported exponent."""
    return int(np.ceil((2.0 / p_ref - 0.5) * max(n, m)))


@dataclass
class FilterBank:
    """Spectral windows for the two factors plus the low-pass residual."""

    grid: Grid
    j_range: tuple[int, int]
    k_range: tuple[int, int]
    profile: str
    psi1_hat: dict[int, np.ndarray]
    psi2_hat: dict[int, np.ndarray]
    lowpass1: np.ndarray
    lowpass2: np.ndarray
    moment_order: int
    c1: float = C1
    c2: float = C2

    @property
    def scale_pairs(self) -> list[tuple[int, int]]:
        j0, j1 = self.j_range
        k0, k1 = self.k_range
        return [(j, k) for j in range(j0, j1 + 1) for k in range(k0, k1 + 1)]

    def lowpass_total(self) -> np.ndarray:
        """Residual of the product resolution: A + B - A*B on the base grid."""
        A = self.lowpass1
        B = self._broadcast2(self.lowpass2)
        return A + B - A * B

    def _broadcast2(self, arr_m: np.ndarray) -> np.ndarray:
        """View an array on the m-dim factor as constant along the first n axes."""
        g = self.grid
        return arr_m.reshape((1,) * g.n + (g.samples,) * g.m)

    def descriptor(self) -> dict:
        g = self.grid
        return {
            "format": "flaghardy-bank",
            "grid": {"n": g.n, "m": g.m, "L": g.L, "side": g.side},
            "profile": self.profile,
            "j_range": list(self.j_range),
            "k_range": list(self.k_range),
            "moment_order": self.moment_order,
            "c1": self.c1,
            "c2": self.c2,
        }


def build_filter_bank(
    grid: Grid,
    j_range: tuple[int, int],
    k_range: tuple[int, int],
    profile: str = "meyer-smooth",
    moment_order: int | None = None,
) -> FilterBank:
    """Construct the bank; raises :class:`FilterBankError` on bad ranges."""
    if profile not in PROFILES:
        raise FilterBankError(f"profile must be one of {PROFILES}, got {profile!r}")
    j0, j1 = j_range
    k0, k1 = k_range
    if j0 > j1 or k0 > k1:
        raise FilterBankError(f"empty scale range: j_range={j_range}, k_range={k_range}")
    top = grid.L - 2
    if j1 > top or k1 > top:
        raise FilterBankError(
            f"scale range exceeds Nyquist margin: max index {max(j1, k1)} > L-2 = {top}"
        )
    if j0 < 0 or k0 < 0:
        raise FilterBankError("scale indices must be nonnegative (coarsest cube = full period)")

    def family(r: np.ndarray, lo: int, hi: int):
        chis = {j: cutoff_profile(r / 2.0**j, profile) for j in range(lo - 1, hi)}
        wins = {}
        for j in range(lo, hi):
            wins[j] = np.sqrt(np.maximum(chis[j] - chis[j - 1], 0.0))
        wins[hi] = np.sqrt(np.maximum(1.0 - chis[hi - 1], 0.0))
        return wins, chis[lo - 1]

    r1 = grid.freq_radial(grid.n + grid.m)
    r2 = grid.freq_radial(grid.m)
    psi1, low1 = family(r1, j0, j1)
    psi2, low2 = family(r2, k0, k1)
    if moment_order is None:
        moment_order = default_moment_order(grid.n, grid.m)
    return FilterBank(
        grid=grid,
        j_range=(j0, j1),
        k_range=(k0, k1),
        profile=profile,
        psi1_hat=psi1,
        psi2_hat=psi2,
        lowpass1=low1,
        lowpass2=low2,
        moment_order=moment_order,
    )


def bank_from_descriptor(desc: dict) -> FilterBank:
    g = desc["grid"]
    bank = build_filter_bank(
        make_grid(g["n"], g["m"], g["L"], g["side"]),
        tuple(desc["j_range"]),
        tuple(desc["k_range"]),
        desc["profile"],
        desc.get("moment_order"),
    )
    return bank


def flag_kernel_spectrum(bank: FilterBank, sp: tuple[int, int]) -> np.ndarray:
    """Multiplier of the flag kernel: psi1_j(k1,k2) * psi2_k(k2)."""
    j, k = sp
    if j not in bank.psi1_hat or k not in bank.psi2_hat:
        raise FilterBankError(f"scale pair {sp} outside bank ranges")
    return bank.psi1_hat[j] * bank._broadcast2(bank.psi2_hat[k])


def kernel_space_side(bank: FilterBank, sp: tuple[int, int]) -> SampledFunction:
    """Space-side flag kernel (inverse transform of the multiplier)."""
    spec = flag_kernel_spectrum(bank, sp)
    vals = np.fft.ifftn(spec.astype(np.complex128)) / bank.grid.cell_volume
    return SampledFunction(bank.grid, vals)


def check_resolution_identity(bank: FilterBank) -> float:
    """Max deviation from 1 of the two factor identities and their product."""
    tot1 = bank.lowpass1.copy()
    for w in bank.psi1_hat.values():
        tot1 = tot1 + w * w
    tot2 = bank.lowpass2.copy()
    for w in bank.psi2_hat.values():
        tot2 = tot2 + w * w
    totp = bank.lowpass_total().copy()
    for sp in bank.scale_pairs:
        w = flag_kernel_spectrum(bank, sp)
        totp = totp + w * w
    return float(
        max(
            np.max(np.abs(tot1 - 1.0)),
            np.max(np.abs(tot2 - 1.0)),
            np.max(np.abs(totp - 1.0)),
        )
    )


def worst_resolution_frequency(bank: FilterBank) -> tuple[float, tuple[int, ...]]:
    """Deviation and the integer frequency index where the product identity is worst."""
    totp = bank.lowpass_total().copy()
    for sp in bank.scale_pairs:
        w = flag_kernel_spectrum(bank, sp)
        totp = totp + w * w
    dev = np.abs(totp - 1.0)
    flat = int(np.argmax(dev))
    idx = np.unravel_index(flat, dev.shape)
    kappa = tuple(int(bank.grid.freq_axis[i]) for i in idx)
    return float(dev[idx]), kappa


def kernel_moments(bank: FilterBank, sp: tuple[int, int], max_order: int = 2) -> dict[int, float]:
    """Worst relative discrete moment per total order 0..max_order.

    Moments are taken about the origin with coordinates unwrapped to the
    centered fundamental domain and normalized by the kernel's L1 mass and
    (side/2)^order.
    """
    psi = kernel_space_side(bank, sp)
    g = bank.grid
    cellvol = g.cell_volume
    l1 = float(np.sum(np.abs(psi.values)) * cellvol)
    xc = g.centered_coords()
    out: dict[int, float] = {}
    axis_powers = {}
    for order in range(max_order + 1):
        worst = 0.0
        for gamma in _multi_indices(g.dim, order):
            mono = np.ones((1,) * g.dim)
            for ax, q in enumerate(gamma):
                if q:
                    key = (ax, q)
                    if key not in axis_powers:
                        shape = [1] * g.dim
                        shape[ax] = g.samples
                        axis_powers[key] = (xc**q).reshape(shape)
                    mono = mono * axis_powers[key]
            mom = abs(complex(np.sum(psi.values * mono) * cellvol))
            worst = max(worst, mom / (l1 * (g.side / 2) ** order))
        out[order] = worst
    return out


def _multi_indices(dim: int, total: int) -> Iterable[tuple[int, ...]]:
    if dim == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _multi_indices(dim - 1, total - head):
            yield (head,) + rest


def kernel_mass_table(bank: FilterBank) -> dict[tuple[int, int], float]:
    """L1 mass of the space-side kernel per scale pair."""
    cellvol = bank.grid.cell_volume
    return {
        sp: float(np.sum(np.abs(kernel_space_side(bank, sp).values)) * cellvol)
        for sp in bank.scale_pairs
    }


# ---------------------------------------------------------------------------
# scale geometry and measured kernel constants (shared by the atom checks)
# ---------------------------------------------------------------------------


def scale_lengths(grid: Grid, sp: tuple[int, int]) -> dict[str, float]:
    """Physical side lengths and measures attached to a scale pair.

    l_i: side of the first-factor cube I (side * 2^-j); l_j_snap: side of
    the second-factor cube J after the dyadic snap of 2^-k + 2^-j; l_j_pure:
    the un-snapped second-factor scale side * 2^-k, which drives the
    second-variable derivative budgets.
    """
    j, k = sp
    l_i = grid.side * 2.0**-j
    l_j_snap = grid.side * 2.0 ** -min(j, k)
    l_j_pure = grid.side * 2.0**-k
    meas_i = l_i**grid.n
    meas_hat = l_i**grid.m
    meas_j = l_j_snap**grid.m
    return {
        "l_i": l_i,
        "l_j_snap": l_j_snap,
        "l_j_pure": l_j_pure,
        "measure_i": meas_i,
        "measure_hat_i": meas_hat,
        "measure_j": meas_j,
        "measure_rect": meas_i * meas_j,
        "measure_sharp": meas_i * meas_hat * meas_j,
    }


def _axis_derivative_sup(values: np.ndarray, grid: Grid, axis: int, order: int) -> float:
    """Sup norm of the order-th spectral derivative along one axis."""
    if order == 0:
        return float(np.max(np.abs(values)))
    spec = np.fft.fftn(values)
    shape = [1] * values.ndim
    shape[axis] = grid.samples
    xi = (2j * np.pi / grid.side) * grid.freq_axis.reshape(shape)
    der = np.fft.ifftn(spec * xi**order)
    return float(np.max(np.abs(der)))


def lift_constants(bank: FilterBank, k_max: int = 2) -> dict:
    """Measured size/smoothness constants of the kernel pair family.

    Returns the dimensionless products |R#| * ||psi1_j||_oo * ||psi2_k||_oo
    and their derivative-budget analogues (scaled by the budget length to
    the derivative order), maximized over the bank's scale pairs.  These
    feed the constant A in the particle size bound.
    """
    cache = getattr(bank, "_lift_constants_cache", None)
    if cache is None:
        cache = {}
        object.__setattr__(bank, "_lift_constants_cache", cache)
    if k_max in cache:
        return cache[k_max]
    g = bank.grid
    sup1: dict[int, float] = {}
    der1: dict[tuple[int, int, int], float] = {}
    kernels1 = {}
    for j in bank.psi1_hat:
        vals = np.fft.ifftn(bank.psi1_hat[j].astype(np.complex128)) / (g.cell ** (g.n + g.m))
        kernels1[j] = vals
        sup1[j] = float(np.max(np.abs(vals)))
    sup2: dict[int, float] = {}
    der2: dict[tuple[int, int], float] = {}
    kernels2 = {}
    for k in bank.psi2_hat:
        vals = np.fft.ifftn(bank.psi2_hat[k].astype(np.complex128)) / (g.cell**g.m)
        kernels2[k] = vals
        sup2[k] = float(np.max(np.abs(vals)))

    # psi1 derivatives: first-factor axes at orders k'*n, second-slot axes at
    # orders k'*m; both scale with the first-factor width.  psi2 at k'*m.
    for j, vals in kernels1.items():
        for kk in range(1, k_max + 1):
            w1 = max(_axis_derivative_sup(vals, g, ax, kk * g.n) for ax in range(g.n))
            w3 = max(_axis_derivative_sup(vals, g, ax, kk * g.m) for ax in range(g.n, g.n + g.m))
            der1[(j, kk, 0)] = w1
            der1[(j, kk, 1)] = w3
    for k, vals in kernels2.items():
        for kk in range(1, k_max + 1):
            der2[(k, kk)] = max(_axis_derivative_sup(vals, g, ax, kk * g.m) for ax in range(g.m))

    a_sup = 0.0
    a_der = 0.0
    for j, k in bank.scale_pairs:
        sl = scale_lengths(g, (j, k))
        vol = sl["measure_sharp"]
        a_sup = max(a_sup, vol * sup1[j] * sup2[k])
        for kk in range(1, k_max + 1):
            a_der = max(a_der, vol * der1[(j, kk, 0)] * sup2[k] * sl["l_i"] ** (kk * g.n))
            a_der = max(a_der, vol * der1[(j, kk, 1)] * sup2[k] * sl["l_i"] ** (kk * g.m))
            a_der = max(a_der, vol * sup1[j] * der2[(k, kk)] * sl["l_j_pure"] ** (kk * g.m))
    result = {
        "k_max": k_max,
        "sup_product": a_sup,
        "derivative_product": a_der,
        "a_hat": max(a_sup, a_der),
        "sup1": sup1,
        "sup2": sup2,
    }
    cache[k_max] = result
    return result


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def save_bank(base_path, bank: FilterBank, with_windows: bool = True) -> None:
    """Write ``<base>.json`` descriptor and optionally ``<base>.npz`` windows."""
    from pathlib import Path

    from .storage import write_json

    base = Path(base_path)
    write_json(base.with_suffix(".json"), bank.descriptor())
    if with_windows:
        arrays = {"lowpass1": bank.lowpass1, "lowpass2": bank.lowpass2}
        for j, w in bank.psi1_hat.items():
            arrays[f"psi1_{j}"] = w
        for k, w in bank.psi2_hat.items():
            arrays[f"psi2_{k}"] = w
        np.savez(base.with_suffix(".npz"), **arrays)


def load_bank(base_path) -> FilterBank:
    """Rebuild from the descriptor; prefer stored windows when present."""
    from pathlib import Path

    from .storage import read_json

    base = Path(base_path)
    desc = read_json(base.with_suffix(".json"))
    bank = bank_from_descriptor(desc)
    npz = base.with_suffix(".npz")
    if npz.exists():
        with np.load(npz) as data:
            bank.lowpass1 = data["lowpass1"]
            bank.lowpass2 = data["lowpass2"]
            for j in list(bank.psi1_hat):
                bank.psi1_hat[j] = data[f"psi1_{j}"]
            for k in list(bank.psi2_hat):
                bank.psi2_hat[k] = data[f"psi2_{k}"]
    return bank
