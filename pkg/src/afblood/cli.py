"""Command-line interface: ``afblood run | convergence | steady-check | list-scenarios``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .analysis import (SUMMARY_FIELDS, convergence_study, reference_averages, relative_errors, riemann_problem,
                       run_scenario)
from .errors import ConfigError, DomainError, NoConvergence, SolverFailure
from .mesh import initialize
from .plots import Snapshot, emit_plots
from .scenarios import builtin_scenarios, get_scenario, load_config

STEADY_RTOL = 1e-12

EXIT_OK = 0
EXIT_BREACH = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def resolve_config(arg, *, order=None, cells=None, no_wb=False):
    """Config from an INI path or a built-in name, with command-line overrides."""
    path = Path(arg)
    cfg = load_config(path) if path.is_file() else get_scenario(arg)
    changes = {}
    if order is not None:
        changes["r"] = order - 1
    if cells is not None:
        changes["N"] = cells
    if no_wb:
        changes["well_balanced"] = False
    return cfg.with_(**changes) if changes else cfg


def _cmd_run(args):
    cfg = resolve_config(args.config, order=args.order, cells=args.cells, no_wb=args.no_well_balanced)
    out = Path(args.out)
    res = run_scenario(cfg, out)
    setup = res.setup
    x = setup.mesh.centers()
    snaps = [Snapshot(t, x, st.moments[0, :, 0].copy(), st.moments[1, :, 0].copy())
             for t, st in sorted(res.snapshots.items())]
    tag = res.files[0].name.rsplit("_t", 1)[0] if res.files else cfg.name
    if cfg.perturbation is not None:
        A, Q = cfg.background(setup.model)
        eq = initialize(setup.mesh, cfg.r, setup.model, A, Q)[0].moments[0, :, 0]
        emit_plots(snaps, out, tag + "_diff", equilibrium=eq)
    elif cfg.reference == "exact_riemann":
        exact = []
        for s in snaps:
            eA, eQ = reference_averages(setup, s.t)
            exact.append(Snapshot(s.t, x, eA, eQ))
        emit_plots(snaps, out, tag, exact=exact)
    else:
        emit_plots(snaps, out, tag)
    for k in SUMMARY_FIELDS:
        v = res.summary[k]
        print(f"{k:>22}: {v:.6e}" if isinstance(v, float) else f"{k:>22}: {v}")
    print(f"output written to {out}")
    return EXIT_OK


def _cmd_convergence(args):
    cfg = resolve_config(args.config, order=args.order, no_wb=args.no_well_balanced)
    try:
        meshes = [int(v) for v in args.meshes.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad mesh list {args.meshes!r}") from None
    table = convergence_study(cfg, meshes)
    text = table.format()
    print(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{cfg.name}_r{cfg.r}_convergence.txt").write_text(text + "\n")
    return EXIT_OK


def _cmd_steady_check(args):
    cfg = resolve_config(args.config, order=args.order, cells=args.cells, no_wb=args.no_well_balanced)
    if cfg.reference != "steady" or cfg.perturbation is not None:
        raise ConfigError(f"{cfg.name} is not an unperturbed steady scenario")
    res = run_scenario(cfg, args.out)
    ref = reference_averages(res.setup, res.final.t)
    scale = float(np.abs(ref[0]).max())
    rel1, relinf = relative_errors(res.summary, scale, cfg.x_right - cfg.x_left)
    ok = rel1 <= STEADY_RTOL and relinf <= STEADY_RTOL
    mode = "WB" if cfg.well_balanced else "NWB"
    print(f"{cfg.name} order {cfg.order} N={cfg.N} {mode}: L1_A={res.summary['L1_A']:.3e} "
          f"Linf_A={res.summary['Linf_A']:.3e} relative L1={rel1:.3e} Linf={relinf:.3e} "
          f"tolerance {STEADY_RTOL:g}: {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_BREACH


def _cmd_list(args):
    for name, cfg in builtin_scenarios().items():
        print(f"{name:<28} {cfg.description}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="afblood", description="Well-balanced active-flux blood-flow solver.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, cells=True):
        sp.add_argument("config", help="INI config file or built-in scenario name")
        sp.add_argument("--order", type=int, choices=(3, 4, 5), help="scheme order (polynomial degree + 1)")
        if cells:
            sp.add_argument("--cells", type=int, help="number of cells")
        sp.add_argument("--no-well-balanced", action="store_true", help="use the non well-balanced source")

    sp = sub.add_parser("run", help="run a scenario and write snapshots, log, summary and plot scripts")
    common(sp)
    sp.add_argument("--out", default="out", help="output directory (default: out)")
    sp.set_defaults(func=_cmd_run)

    sp = sub.add_parser("convergence", help="Runge-type convergence study on doubling meshes")
    common(sp, cells=False)
    sp.add_argument("--meshes", default="40,80,160,320,640", help="comma-separated doubling mesh sizes")
    sp.add_argument("--out", help="directory for the rate table")
    sp.set_defaults(func=_cmd_convergence)

    sp = sub.add_parser("steady-check", help="check that a steady scenario stays steady (exit 1 on breach)")
    common(sp)
    sp.add_argument("--out", help="optional output directory")
    sp.set_defaults(func=_cmd_steady_check)

    sp = sub.add_parser("list-scenarios", help="list the built-in scenarios")
    sp.set_defaults(func=_cmd_list)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverFailure, DomainError, NoConvergence) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
