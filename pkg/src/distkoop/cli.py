"""Command-line entry point.

Subcommands compose through files only: ``simulate`` writes snapshot
matrices, ``fit`` turns them into a persisted operator, ``spectrum`` and
``predict`` consume the operator, ``experiment`` runs the scripted
studies, and ``grid forecast`` drives the raster pipeline. Every
invocation echoes its resolved configuration into the output directory
before computing, and removes partial outputs on failure.

Exit codes: 0 success, 2 configuration error (message names the offending
key), 1 runtime or numerical error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .dmd import (
    fit_dko,
    load_operator,
    load_snapshots,
    predict,
    save_operator,
    save_snapshots,
    snapshots_from_pairs,
    spectrum,
    write_spectrum_csv,
)
from .errors import ConfigError, DistkoopError
from .experiments import (
    EXPERIMENTS,
    load_config,
    render_config,
    run_circle_spectrum,
    run_convergence,
    run_grid_forecast,
    run_noise_sweep,
    run_sde_predict,
    run_sensitivity,
    run_variance_predict,
)
from .experiments.common import OutputTracker, write_manifest, write_results_csv
from .experiments.config import desk_defaults
from .experiments.report import (
    report_circle_spectrum,
    report_convergence,
    report_grid_forecast,
    report_prediction,
    report_sweep,
)
from .measures import dirac, sub_arc_measures
from .rds import ensemble_measure_pairs, generate_pairs, generate_trajectory, simulate_ensemble
from .seeding import derived_rng, spawn_seeds


def _config_key_listing() -> str:
    lines = ["configuration keys and desk-scale defaults:"]
    for name in EXPERIMENTS:
        lines.append(f"\n[{name}]")
        for section, entries in desk_defaults(name).items():
            for key in sorted(entries):
                lines.append(f"  {section}.{key} = {entries[key]}")
        lines.append("  experiment.seed = (required)")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="distkoop",
        description="simulate random dynamics, fit distribution-level Koopman operators, "
        "analyze spectra, and reproduce the experiment suite",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        p.add_argument("--out", required=True, help="output directory for all artifacts")
        p.add_argument("--seed", type=int, default=None, help="root seed (mandatory here or in config)")
        p.add_argument("--threads", type=int, default=1, help="worker-thread cap for repeats")
        p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
        if config:
            p.add_argument("--config", default=None, help="INI-style configuration file")
            p.add_argument(
                "--set",
                action="append",
                default=[],
                metavar="SECTION.KEY=VALUE",
                help="override one resolved configuration value (repeatable)",
            )
            p.add_argument(
                "--paper-scale",
                nargs="?",
                const="true",
                default="false",
                metavar="BOOL",
                help="restore full published budgets instead of desk-scale defaults "
                "(bare flag or =true/=false)",
            )

    p_sim = sub.add_parser("simulate", help="generate trajectories and snapshot matrices")
    common(p_sim)

    p_fit = sub.add_parser("fit", help="fit an operator from saved snapshot matrices")
    common(p_fit, config=False)
    p_fit.add_argument("--snapshots", required=True, help="snapshot file stem (.npz/.json)")
    p_fit.add_argument("--svd-cutoff", type=float, default=1e-10, help="relative SVD cutoff")

    p_spec = sub.add_parser("spectrum", help="eigendecomposition of a saved operator")
    common(p_spec, config=False)
    p_spec.add_argument("--operator", required=True, help="operator file stem (.npy/.json)")

    p_pred = sub.add_parser("predict", help="multi-step prediction with a saved operator")
    common(p_pred, config=False)
    p_pred.add_argument("--operator", required=True, help="operator file stem (.npy/.json)")
    p_pred.add_argument("--steps", type=int, required=True, help="number of snapshot steps")
    group = p_pred.add_mutually_exclusive_group(required=True)
    group.add_argument("--dirac-at", type=float, default=None, help="start from a point mass here")
    group.add_argument("--v0", default=None, help="CSV file holding the initial coefficient vector")

    p_exp = sub.add_parser(
        "experiment",
        help="run one scripted experiment",
        epilog=_config_key_listing(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p_exp.add_argument("name", choices=EXPERIMENTS, help="experiment to run")
    common(p_exp)

    p_grid = sub.add_parser("grid", help="gridded-field pipeline")
    p_grid.add_argument("action", choices=("forecast",), help="pipeline action")
    common(p_grid)
    p_grid.add_argument("--data", default=None, help="raster directory (manifest + frames)")
    p_grid.add_argument("--train", type=int, default=None, help="training frames")
    p_grid.add_argument("--horizon", type=int, default=None, help="forecast steps past training")
    p_grid.add_argument("--patches", default=None, metavar="RxC", help="patch grid, e.g. 50x50")
    return parser


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------


def _echo_invocation(tracker: OutputTracker, entries: dict) -> None:
    text = render_config({"invocation": {k: str(v) for k, v in entries.items()}})
    tracker.path("config.echo").write_text(text)


def _parse_bool(raw: str, key: str) -> bool:
    value = str(raw).strip().lower()
    if value in ("true", "1", "yes", "on"):
        return True
    if value in ("false", "0", "no", "off"):
        return False
    raise ConfigError(key, f"expected a boolean, got {raw!r}")


def cmd_simulate(args, tracker: OutputTracker) -> int:
    cfg = load_config(
        "simulate", args.config, args.set, seed=args.seed,
        paper_scale=_parse_bool(args.paper_scale, "paper-scale"), threads=args.threads,
    )
    tracker.path("config.echo").write_text(cfg.echo())
    model = cfg.model()
    bank = cfg.bank()
    m, k = cfg.data_m, cfg.data_k
    s_meas, s_pairs, s_traj = spawn_seeds(cfg.seed, 3, 0)
    if model.kind == "rotation":
        measures = sub_arc_measures(m, k, seed=s_meas)
        pairs = generate_pairs(model, measures, seed=s_pairs)
        traj = generate_trajectory(model, 0.0, cfg.data_n_sko, seed=s_traj)
    else:
        x0 = derived_rng(s_meas).standard_normal(k)
        traj = simulate_ensemble(model, x0, m, seed=s_pairs)
        pairs = ensemble_measure_pairs(traj)
    snap = snapshots_from_pairs(bank, pairs, model.snapshot_dt)
    save_snapshots(
        snap, tracker.out_dir / "snapshots", bank=bank, seed_info={"seed": cfg.seed}
    )
    tracker.created += [tracker.out_dir / "snapshots.npz", tracker.out_dir / "snapshots.json"]
    rows = []
    times = traj.times()
    for member in range(traj.n_members):
        for j, t in enumerate(times):
            rows.append((member, j, t, traj.states[member, j]))
    write_results_csv(tracker.path("trajectory.csv"), ["member", "step", "time", "x"], rows)
    write_manifest(
        tracker.path("manifest"),
        {"command": "simulate", "seed": cfg.seed, "model": model.kind, "pairs": len(pairs)},
    )
    return 0


def cmd_fit(args, tracker: OutputTracker) -> int:
    _echo_invocation(
        tracker, {"command": "fit", "snapshots": args.snapshots, "svd_cutoff": args.svd_cutoff}
    )
    snap, bank = load_snapshots(args.snapshots)
    km = fit_dko(snap, svd_rel_cutoff=args.svd_cutoff)
    save_operator(
        km, tracker.out_dir / "operator", bank=bank, seed_info={"snapshots": str(args.snapshots)}
    )
    tracker.created += [tracker.out_dir / "operator.npy", tracker.out_dir / "operator.json"]
    write_manifest(
        tracker.path("manifest"),
        {
            "command": "fit",
            "rank": km.fit_report.rank,
            "residual_fro": km.fit_report.residual_fro,
            "normal_residual": km.fit_report.normal_residual,
        },
    )
    return 0


def cmd_spectrum(args, tracker: OutputTracker) -> int:
    _echo_invocation(tracker, {"command": "spectrum", "operator": args.operator})
    km, _ = load_operator(args.operator)
    decomp = spectrum(km)
    write_spectrum_csv(decomp, tracker.path("spectrum.csv"))
    if not args.no_figures:
        from . import figures

        figures.save_spectrum_figure(
            tracker.path("spectrum.png"), {"operator": decomp.eigenvalues}
        )
    write_manifest(tracker.path("manifest"), {"command": "spectrum", "n": km.n})
    return 0


def cmd_predict(args, tracker: OutputTracker) -> int:
    _echo_invocation(
        tracker,
        {
            "command": "predict",
            "operator": args.operator,
            "steps": args.steps,
            "dirac_at": args.dirac_at,
            "v0": args.v0,
        },
    )
    km, bank = load_operator(args.operator)
    if args.dirac_at is not None:
        if bank is None:
            raise ConfigError("predict.dirac-at", "operator file carries no bank descriptor")
        v0 = bank.evaluate(dirac(args.dirac_at))
    else:
        v0 = np.loadtxt(args.v0, delimiter=",").ravel()
    history = predict(km, v0, args.steps)
    header = ["step", "time"] + list(km.bank_labels)
    rows = [(ell, ell * km.dt, *history[ell]) for ell in range(args.steps + 1)]
    write_results_csv(tracker.path("predictions.csv"), header, rows)
    if not args.no_figures:
        from . import figures

        times = np.arange(args.steps + 1) * km.dt
        curves = {
            label: (times, history[:, i], np.zeros(args.steps + 1))
            for i, label in enumerate(km.bank_labels[: min(km.n, 6)])
        }
        figures.save_curve_figure(
            tracker.path("predictions.png"), curves,
            xlabel="time", ylabel="observable value", logy=False, title="operator prediction",
        )
    write_manifest(tracker.path("manifest"), {"command": "predict", "steps": args.steps})
    return 0


def cmd_experiment(args, tracker: OutputTracker) -> int:
    cfg = load_config(
        args.name, args.config, args.set, seed=args.seed,
        paper_scale=_parse_bool(args.paper_scale, "paper-scale"), threads=args.threads,
    )
    tracker.path("config.echo").write_text(cfg.echo())
    render = not args.no_figures
    if args.name == "circle_spectrum":
        report_circle_spectrum(run_circle_spectrum(cfg), cfg, tracker, render)
    elif args.name == "sensitivity":
        report_sweep(run_sensitivity(cfg), cfg, tracker, render, axis_name="n_samples", logx=True)
    elif args.name == "noise_sweep":
        report_sweep(run_noise_sweep(cfg), cfg, tracker, render, axis_name="sigma", logx=False)
    elif args.name == "sde_predict":
        report_prediction(run_sde_predict(cfg), cfg, tracker, render, label="observable forecast MSE")
    elif args.name == "variance_predict":
        report_prediction(run_variance_predict(cfg), cfg, tracker, render, label="variance forecast MSE")
    elif args.name == "convergence":
        report_convergence(run_convergence(cfg), cfg, tracker, render)
    else:  # grid_forecast
        report_grid_forecast(run_grid_forecast(cfg), cfg, tracker, render)
    return 0


def cmd_grid(args, tracker: OutputTracker) -> int:
    overrides = list(args.set)
    if args.data:
        overrides.append(f"grid.data_path={args.data}")
    if args.train is not None:
        overrides.append(f"grid.train_frames={args.train}")
    if args.horizon is not None:
        overrides.append(f"grid.horizon={args.horizon}")
    if args.patches:
        rows, sep, cols = args.patches.lower().partition("x")
        if not sep:
            raise ConfigError("grid.patches", "expected RxC, e.g. 50x50")
        overrides.append(f"grid.patch_rows={rows}")
        overrides.append(f"grid.patch_cols={cols}")
    cfg = load_config(
        "grid_forecast", args.config, overrides, seed=args.seed,
        paper_scale=_parse_bool(args.paper_scale, "paper-scale"), threads=args.threads,
    )
    tracker.path("config.echo").write_text(cfg.echo())
    report_grid_forecast(run_grid_forecast(cfg), cfg, tracker, not args.no_figures)
    return 0


_HANDLERS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "spectrum": cmd_spectrum,
    "predict": cmd_predict,
    "experiment": cmd_experiment,
    "grid": cmd_grid,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    tracker = OutputTracker(args.out)
    try:
        return _HANDLERS[args.command](args, tracker)
    except ConfigError as exc:
        tracker.discard_partial()
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except DistkoopError as exc:
        tracker.discard_partial()
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failures also clean up partial output
        tracker.discard_partial()
        print(f"unexpected error: {exc!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
