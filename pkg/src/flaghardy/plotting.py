"""Figure rendering from corpus-run CSV output.

Kept apart from the numerical core: figures are derived from the
delimited reports, never the other way around.  Usable as a module
(``render_figures``) or a script (``python -m flaghardy.plotting OUTDIR``).
"""
from __future__ import annotations

import csv
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _read_csv(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def render_figures(out_dir) -> list[Path]:
    """Render the standard figure set next to the CSVs; returns the paths."""
    out = Path(out_dir)
    fig_dir = out / "figures"
    fig_dir.mkdir(exist_ok=True)
    written: list[Path] = []
    summary_path = out / "corpus_summary.csv"
    atoms_path = out / "atoms.csv"

    if summary_path.exists():
        rows = _read_csv(summary_path)
        written.append(_lambda_ratio_figure(rows, fig_dir))
        written.append(_residual_figure(rows, fig_dir))
        written.append(_gf_bound_figure(rows, fig_dir))
    if atoms_path.exists():
        atom_rows = _read_csv(atoms_path)
        if atom_rows:
            written.append(_atom_size_figure(atom_rows, fig_dir))
    return [p for p in written if p is not None]


def _lambda_ratio_figure(rows: list[dict], fig_dir: Path) -> Path:
    by_p = defaultdict(list)
    for r in rows:
        by_p[float(r["p"])].append((int(r["signal"]), float(r["lambda_ratio"])))
    fig, ax = plt.subplots(figsize=(6, 4))
    for p, pairs in sorted(by_p.items()):
        pairs.sort()
        ax.plot([s for s, _ in pairs], [v for _, v in pairs], marker="o", label=f"p={p}")
    ax.set_xlabel("corpus signal")
    ax.set_ylabel(r"$\sum_i \lambda_i^p \, / \, \|f\|_{H^p_F}^p$")
    ax.set_yscale("log")
    ax.set_title("coefficient sum against the flag Hardy norm")
    ax.legend()
    path = fig_dir / "lambda_ratio.png"
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _residual_figure(rows: list[dict], fig_dir: Path) -> Path:
    by_p = defaultdict(list)
    for r in rows:
        by_p[float(r["p"])].append((int(r["signal"]), float(r["reassembly_residual"])))
    fig, ax = plt.subplots(figsize=(6, 4))
    width = 0.8 / max(1, len(by_p))
    for i, (p, pairs) in enumerate(sorted(by_p.items())):
        pairs.sort()
        xs = [s + i * width for s, _ in pairs]
        ax.bar(xs, [max(v, 1e-18) for _, v in pairs], width=width, label=f"p={p}")
    ax.set_xlabel("corpus signal")
    ax.set_ylabel("relative reassembly residual")
    ax.set_yscale("log")
    ax.axhline(1e-8, color="k", linestyle="--", linewidth=0.8, label="tolerance")
    ax.set_title("atomic reassembly residuals")
    ax.legend()
    path = fig_dir / "reassembly_residuals.png"
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _gf_bound_figure(rows: list[dict], fig_dir: Path) -> Path:
    by_p = defaultdict(list)
    for r in rows:
        by_p[float(r["p"])].append(float(r["sup_gf_bound"]))
    fig, ax = plt.subplots(figsize=(6, 4))
    for p, vals in sorted(by_p.items()):
        ax.plot(range(len(vals)), sorted(vals), marker=".", label=f"p={p}")
    ax.set_xlabel("corpus signal (sorted)")
    ax.set_ylabel(r"$\sup_i \|g_F(a_i)\|_p$")
    ax.set_title("square-function bounds of produced atoms")
    ax.legend()
    path = fig_dir / "gf_bounds.png"
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _atom_size_figure(atom_rows: list[dict], fig_dir: Path) -> Path:
    ratios = [float(r["l2_ratio_tilde"]) for r in atom_rows if r.get("l2_ratio_tilde")]
    if not ratios:
        return None
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(ratios, bins=30, color="#46608c")
    ax.axvline(1.0, color="k", linestyle="--", linewidth=0.8, label="size bound")
    ax.set_xlabel(r"$\|a_i\|_2 \, |\tilde\Omega_i|^{1/2 - 1/p}$")
    ax.set_ylabel("atoms")
    ax.set_title("calibrated atom sizes")
    ax.legend()
    path = fig_dir / "atom_l2_ratios.png"
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


if __name__ == "__main__":
    target = sys.argv[1] if len(sys.argv) > 1 else "."
    for p in render_figures(target):
        print(p)
