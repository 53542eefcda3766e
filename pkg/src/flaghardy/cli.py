"""Batch command-line driver.

Subcommands: filters-check | decompose | validate | reconstruct | norm |
operator-test | corpus-run.  Exit codes: 0 pass, 1 validation failure,
2 usage/config error.  Reports are machine-first (JSON/CSV); the report
path of ``corpus-run`` additionally renders figures from the CSV output
unless ``--no-figures`` is given.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .atoms import (
    DecompositionConfig,
    check_manifest_artifacts,
    decompose_multi,
    save_decomposition,
)
from .config import ConfigError, RunConfig, default_corpus, load_config
from .filters import (
    FilterBankError,
    build_filter_bank,
    check_resolution_identity,
    kernel_mass_table,
    kernel_moments,
    load_bank,
    save_bank,
    worst_resolution_frequency,
)
from .grid import GridError, SampledFunction, SignalError, lp_norm, synthesize
from .operators import (
    OperatorError,
    apply as op_apply,
    build_multiplier,
    load_symbol,
    transfer_check,
    uniform_atom_test,
)
from .storage import StorageError, read_function, write_function, write_json
from .transform import analyze, flag_project, hp_norm, reconstruct
from .validation import ValidationThresholds, reports_to_csv, validate_decomposition

_USAGE_ERRORS = (ConfigError, FilterBankError, OperatorError, SignalError, GridError)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value config file (or .json)")
    parser.add_argument("--config-json", help="JSON override file")
    parser.add_argument("--p", help="comma-separated exponent list")
    parser.add_argument("--grid-L", type=int, dest="grid_L", help="log2 samples per axis")
    parser.add_argument("--profile", help="meyer-smooth | shannon-sharp")
    parser.add_argument("--seed", type=int, help="corpus RNG seed")
    parser.add_argument("--out", help="output directory")


def _config_from_args(args) -> RunConfig:
    overrides = {
        "p_list": tuple(float(t) for t in args.p.split(",")) if args.p else None,
        "L": args.grid_L,
        "profile": args.profile,
        "seed": args.seed,
        "out_dir": args.out,
    }
    return load_config(args.config, args.config_json, overrides)


def _bank(cfg: RunConfig):
    jr, kr = cfg.ranges()
    return build_filter_bank(cfg.grid(), jr, kr, cfg.profile)


def _corpus_signals(cfg: RunConfig, bank) -> list[tuple[dict, SampledFunction]]:
    """Synthesized corpus, projected onto the flag-representable band, unit L2."""
    out = []
    for spec in default_corpus(cfg):
        f = flag_project(synthesize(spec, bank.grid), bank)
        n2 = lp_norm(f, 2.0)
        if n2 > 0:
            f = f.copy_with(f.values / n2)
        out.append((spec.to_dict(), f))
    return out


def _load_signal(cfg: RunConfig, args, bank) -> tuple[str, SampledFunction]:
    if getattr(args, "input", None):
        f = read_function(args.input)
        if f.grid != bank.grid:
            raise ConfigError(f"signal grid {f.grid} does not match configured grid {bank.grid}")
        return Path(args.input).name, f
    idx = getattr(args, "corpus_index", 0) or 0
    corpus = _corpus_signals(cfg, bank)
    if not 0 <= idx < len(corpus):
        raise ConfigError(f"corpus index {idx} outside 0..{len(corpus) - 1}")
    return f"corpus[{idx}]", corpus[idx][1]


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _report_header(cfg: RunConfig) -> dict:
    return {
        "version": __version__,
        "config": cfg.to_dict(),
        "config_hash": cfg.config_hash(),
        "constants": {
            "enlargement": cfg.enlargement,
            "majority": cfg.majority,
            "dilation": cfg.dilation,
            "hl_cutoff": cfg.hl_cutoff,
        },
    }


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_filters_check(args) -> int:
    cfg = _config_from_args(args)
    if args.bank:
        bank = load_bank(args.bank)
    else:
        bank = _bank(cfg)
    out = _out_dir(cfg)
    dev = check_resolution_identity(bank)
    tol = 0.0 if bank.profile == "shannon-sharp" else 1e-10
    worst_dev, worst_freq = worst_resolution_frequency(bank)
    j1 = bank.j_range[1]
    k1 = bank.k_range[1]
    moment_tol = 1e-8
    # the moment claim is meaningful once the kernel width drops below
    # side/32; coarser banks get the values reported without gating the
    # exit code (their residuals measure the wrap seam)
    moments_gated = min(j1, k1) >= 5
    moments = {}
    moment_fail = None
    if bank.profile == "meyer-smooth":
        table = kernel_moments(bank, (j1, k1), max_order=2)
        moments[f"{j1},{k1}"] = table
        if moments_gated:
            for order, residual in table.items():
                if residual > moment_tol and moment_fail is None:
                    moment_fail = {"scale_pair": [j1, k1], "order": order, "residual": residual}
    masses = kernel_mass_table(bank)
    mass_values = list(masses.values())
    report = _report_header(cfg)
    report.update(
        {
            "command": "filters-check",
            "profile": bank.profile,
            "resolution_deviation": dev,
            "resolution_tolerance": tol,
            "worst_frequency": list(worst_freq),
            "moment_tolerance": moment_tol,
            "moments_gated": moments_gated,
            "moments_finest_scale": moments,
            "kernel_mass_min": min(mass_values),
            "kernel_mass_max": max(mass_values),
            "moment_failure": moment_fail,
        }
    )
    passed = bool(dev <= tol and moment_fail is None)
    report["passed"] = passed
    write_json(out / "filters_report.json", report)
    print(f"filters-check: resolution deviation {dev:.3e} (tol {tol:.1e}) at kappa={worst_freq}")
    if moment_fail:
        print(f"filters-check: moment failure {moment_fail}")
    print(f"filters-check: {'PASS' if passed else 'FAIL'} -> {out / 'filters_report.json'}")
    return 0 if passed else 1


def cmd_decompose(args) -> int:
    cfg = _config_from_args(args)
    bank = _bank(cfg)
    name, f = _load_signal(cfg, args, bank)
    ps = [p for p in cfg.p_list if 0 < p <= 1]
    if not ps:
        raise ConfigError(f"decompose needs at least one exponent in (0,1], got {cfg.p_list}")
    out = _out_dir(cfg)
    dcfg = cfg.decomposition_config()
    decs = decompose_multi(f, bank, ps, dcfg)
    for p in ps:
        dec = decs[p]
        dest = out / f"decompose_p{p}"
        save_decomposition(
            dec,
            dest,
            dcfg,
            signal=f,
            particle_samples=cfg.particle_dumps,
            extra={"signal_name": name, "config_hash": cfg.config_hash()},
        )
        d = dec.diagnostics
        print(
            f"decompose {name} p={p}: atoms={d['atom_count']} "
            f"sum_lambda^p={d['sum_lambda_p']:.6e} hp_norm^p={d['hp_norm'] ** p:.6e} "
            f"residual={d['reassembly_residual']:.3e}"
        )
    return 0


def cmd_validate(args) -> int:
    cfg = _config_from_args(args)
    try:
        manifest = check_manifest_artifacts(args.manifest)
    except StorageError as e:
        print(f"validate: {e}", file=sys.stderr)
        return 1
    base = Path(args.manifest).parent
    from .filters import bank_from_descriptor

    bank = bank_from_descriptor(manifest["bank"])
    signal = read_function(base / manifest["files"]["signal"])
    p = manifest["p"]
    thr = manifest["thresholds"]
    from .maximal import MaximalConfig

    dcfg = DecompositionConfig(
        enlargement_threshold=thr["enlargement"],
        majority=thr["majority"],
        dilation=thr["dilation"],
        hl_cutoff=thr["hl_cutoff"],
        max_levels=thr.get("max_levels", cfg.max_levels),
        maximal=MaximalConfig(family=thr.get("maximal_family", "dyadic")),
    )
    dec = decompose_multi(signal, bank, [p], dcfg)[p]
    scale = args.tolerance_scale
    thresholds = ValidationThresholds(
        l2_ratio=1.0 + 1e-9 * scale,
        dr_sum_ratio=1.0 + 1e-6 * scale,
        moment_residual=1e-7 * scale,
        marginalization=1e-8 * scale,
        derivative_ratio=1.0 + 0.1 * scale,
        lift_leak=1e-3 * scale,
    )
    result = validate_decomposition(dec, dcfg, thresholds, lift_samples=cfg.lift_samples)
    for idx, rel in enumerate(manifest["files"].get("atoms", [])):
        stored = read_function(base / rel)
        recomputed = dec.atoms[idx].values
        gap = float(np.max(np.abs(stored.values - recomputed.values)))
        if gap > 1e-10:
            result["failures"].append(f"atom {idx}: stored artifact deviates by {gap:.3e}")
    reports_to_csv(result["reports"], base / "atom_reports.csv")
    write_json(
        base / "validation_report.json",
        {
            **_report_header(cfg),
            "command": "validate",
            "p": p,
            "atom_count": len(dec.atoms),
            "lift_sample_count": result["lift_sample_count"],
            "a_hat": result["a_hat"],
            "a_sum_constant": result["a_sum_constant"],
            "failures": result["failures"],
            "passed": not result["failures"],
        },
    )
    for failure in result["failures"]:
        print(f"validate: FAIL {failure}")
    print(f"validate: {'PASS' if not result['failures'] else 'FAIL'} ({len(dec.atoms)} atoms) -> {base / 'atom_reports.csv'}")
    return 0 if not result["failures"] else 1


def cmd_reconstruct(args) -> int:
    cfg = _config_from_args(args)
    bank = _bank(cfg)
    name, f = _load_signal(cfg, args, bank)
    out = _out_dir(cfg)
    coeffs = analyze(f, bank)
    recon = reconstruct(coeffs)
    n2 = lp_norm(f, 2.0)
    residual = lp_norm(f.copy_with(f.values - recon.values), 2.0) / n2 if n2 > 0 else 0.0
    write_function(out / "reconstruction.bin", recon)
    report = {
        **_report_header(cfg),
        "command": "reconstruct",
        "signal": name,
        "relative_l2_residual": residual,
        "coarse_mass": lp_norm(coeffs.coarse, 2.0),
        "passed": residual <= 1e-9,
    }
    write_json(out / "reconstruct_report.json", report)
    print(f"reconstruct {name}: residual {residual:.3e} -> {out / 'reconstruction.bin'}")
    return 0 if report["passed"] else 1


def cmd_norm(args) -> int:
    cfg = _config_from_args(args)
    bank = _bank(cfg)
    name, f = _load_signal(cfg, args, bank)
    out = _out_dir(cfg)
    norms = {"l2": lp_norm(f, 2.0)}
    for p in cfg.p_list:
        norms[f"hp_{p}"] = hp_norm(f, bank, p)
    report = {**_report_header(cfg), "command": "norm", "signal": name, "norms": norms}
    write_json(out / "norm_report.json", report)
    for key, val in norms.items():
        print(f"norm {name}: {key} = {val:.9e}")
    return 0


def _resolve_operator(args, grid):
    from .operators import MULTIPLIER_KINDS

    name = args.symbol
    if name in MULTIPLIER_KINDS and name != "custom":
        return build_multiplier(name, {}, grid)
    return load_symbol(name, grid)


def cmd_operator_test(args) -> int:
    cfg = _config_from_args(args)
    bank = _bank(cfg)
    op = _resolve_operator(args, bank.grid)
    out = _out_dir(cfg)
    corpus = _corpus_signals(cfg, bank)
    dcfg = cfg.decomposition_config()
    ps = [p for p in cfg.p_list if 0 < p <= 1]
    report = {**_report_header(cfg), "command": "operator-test", "symbol": op.kind, "l2_norm": op.l2_norm, "per_p": {}}
    ok = True
    for p in ps:
        decs = []
        transfers = []
        for spec, f in corpus:
            dec = decompose_multi(f, bank, [p], dcfg)[p]
            decs.append(dec)
            transfers.append(transfer_check(op, f, p, dec))
        atom_report = uniform_atom_test(op, decs, p)
        baseline = 0.0
        for dec in decs:
            for atom in dec.atoms:
                baseline = max(baseline, lp_norm(atom.values, p))
        transfer_ok = bool(all(t <= 1.0 + 1e-9 for t in transfers))
        ok = bool(ok and transfer_ok and np.isfinite(atom_report["sup_atom_lp"]))
        report["per_p"][str(p)] = {
            "sup_atom_lp": atom_report["sup_atom_lp"],
            "sup_atom_hp": atom_report["sup_atom_hp"],
            "baseline_sup_lp": baseline,
            "transfer_ratios": transfers,
            "transfer_ok": transfer_ok,
            "atom_count": sum(len(d.atoms) for d in decs),
        }
        print(
            f"operator-test {op.kind} p={p}: sup|Ta|_p={atom_report['sup_atom_lp']:.6e} "
            f"sup|Ta|_Hp={atom_report['sup_atom_hp']:.6e} transfer<=1: {transfer_ok}"
        )
    report["passed"] = ok
    write_json(out / "operator_report.json", report)
    return 0 if ok else 1


def cmd_corpus_run(args) -> int:
    import csv as _csv

    cfg = _config_from_args(args)
    bank = _bank(cfg)
    out = _out_dir(cfg)
    dcfg = cfg.decomposition_config()
    dev = check_resolution_identity(bank)
    corpus = _corpus_signals(cfg, bank)
    ps = [p for p in cfg.p_list if 0 < p <= 1]
    summary_rows = []
    atom_rows = []
    failures: list[str] = []
    identity = build_multiplier("identity", {}, bank.grid)
    flagop = build_multiplier("marcinkiewicz-flag", {}, bank.grid)
    for s_idx, (spec, f) in enumerate(corpus):
        coeffs = analyze(f, bank)
        recon = reconstruct(coeffs)
        n2 = lp_norm(f, 2.0)
        recon_residual = lp_norm(f.copy_with(f.values - recon.values), 2.0) / n2 if n2 > 0 else 0.0
        energy_gap = abs(hp_norm(f, bank, 2.0) - n2) / n2 if n2 > 0 else 0.0
        decs = decompose_multi(f, bank, ps, dcfg)
        for p in ps:
            dec = decs[p]
            val = validate_decomposition(dec, dcfg, lift_samples=max(2, cfg.lift_samples // max(1, len(corpus))))
            failures.extend(f"signal {s_idx} p={p}: {msg}" for msg in val["failures"])
            sup_gf = max((r.gf_bound for r in val["reports"]), default=0.0)
            transfer_identity = transfer_check(identity, f, p, dec)
            transfer_flag = transfer_check(flagop, f, p, dec)
            d = dec.diagnostics
            summary_rows.append(
                [
                    s_idx,
                    spec["kind"],
                    p,
                    n2,
                    d["hp_norm"],
                    d["sum_lambda_p"],
                    d.get("lambda_ratio", 0.0),
                    d["atom_count"],
                    d["rect_count"],
                    d["reassembly_residual"],
                    recon_residual,
                    energy_gap,
                    d["coarse_mass"],
                    d["max_enlargement_ratio"],
                    sup_gf,
                    transfer_identity,
                    transfer_flag,
                ]
            )
            for rep in val["reports"]:
                atom_rows.append([s_idx, p] + rep.row())

    summary_header = [
        "signal",
        "kind",
        "p",
        "l2_norm",
        "hp_norm",
        "sum_lambda_p",
        "lambda_ratio",
        "atom_count",
        "rect_count",
        "reassembly_residual",
        "reconstruction_residual",
        "energy_gap_p2",
        "coarse_mass",
        "max_enlargement_ratio",
        "sup_gf_bound",
        "transfer_identity",
        "transfer_marcinkiewicz",
    ]
    with open(out / "corpus_summary.csv", "w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(summary_header)
        w.writerows(summary_rows)
    with open(out / "atoms.csv", "w", newline="") as fh:
        w = _csv.writer(fh)
        from .validation import AtomReport

        w.writerow(["signal", "p"] + list(AtomReport.ROW_FIELDS))
        w.writerows(atom_rows)

    manifest = {
        **_report_header(cfg),
        "command": "corpus-run",
        "resolution_deviation": dev,
        "signals": [spec for spec, _ in corpus],
        "p_list": ps,
        "failures": failures,
        "passed": not failures,
        "files": {"summary": "corpus_summary.csv", "atoms": "atoms.csv"},
    }
    write_json(out / "run_manifest.json", manifest)
    save_bank(out / "bank", bank, with_windows=False)
    if cfg.figures and not args.no_figures:
        from .plotting import render_figures

        figs = render_figures(out)
        print(f"corpus-run: wrote {len(figs)} figures under {out / 'figures'}")
    print(
        f"corpus-run: {len(corpus)} signals x {len(ps)} exponents, "
        f"{'PASS' if not failures else f'{len(failures)} failures'} -> {out}"
    )
    return 0 if not failures else 1


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="flaghardy", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_filters = sub.add_parser("filters-check", help="resolution-of-identity and moment checks")
    p_filters.add_argument("--bank", help="load bank from <base>.json/.npz instead of building")
    _add_common(p_filters)
    p_filters.set_defaults(func=cmd_filters_check)

    p_dec = sub.add_parser("decompose", help="atomic decomposition of a signal or corpus entry")
    p_dec.add_argument("--input", help="signal binary (grid_core format)")
    p_dec.add_argument("--corpus-index", type=int, default=0)
    _add_common(p_dec)
    p_dec.set_defaults(func=cmd_decompose)

    p_val = sub.add_parser("validate", help="re-run the atom checks against a manifest")
    p_val.add_argument("--manifest", required=True)
    p_val.add_argument("--tolerance-scale", type=float, default=1.0)
    _add_common(p_val)
    p_val.set_defaults(func=cmd_validate)

    p_rec = sub.add_parser("reconstruct", help="analyze + reconstruct round trip")
    p_rec.add_argument("--input")
    p_rec.add_argument("--corpus-index", type=int, default=0)
    _add_common(p_rec)
    p_rec.set_defaults(func=cmd_reconstruct)

    p_norm = sub.add_parser("norm", help="flag Hardy norms of a signal")
    p_norm.add_argument("--input")
    p_norm.add_argument("--corpus-index", type=int, default=0)
    _add_common(p_norm)
    p_norm.set_defaults(func=cmd_norm)

    p_op = sub.add_parser("operator-test", help="uniform atom bound and transfer check")
    p_op.add_argument("--symbol", required=True, help="identity | marcinkiewicz-flag | riesz-like | <base path>")
    _add_common(p_op)
    p_op.set_defaults(func=cmd_operator_test)

    p_run = sub.add_parser("corpus-run", help="full batch over the corpus")
    p_run.add_argument("--no-figures", action="store_true")
    _add_common(p_run)
    p_run.set_defaults(func=cmd_corpus_run)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _USAGE_ERRORS as e:
        print(f"flaghardy {args.command}: {e}", file=sys.stderr)
        return 2
    except StorageError as e:
        print(f"flaghardy {args.command}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
