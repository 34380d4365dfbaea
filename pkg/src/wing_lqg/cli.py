"""Command-line interface.

Subcommands write CSV files into ``--output-dir``::

    wing-lqg modes  --preset example16
    wing-lqg poles  --preset example16
    wing-lqg lqr    --preset example16
    wing-lqg kalman --preset example16 --sim
    wing-lqg aero   --preset wing32 --coupling one-way
    wing-lqg sim    --preset wing32 --feedback full-state

Exit status: 0 on success, 1 on a numerical or domain failure, 2 on a usage
or configuration error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from ._io import write_csv, write_text
from .config import PRESETS, RunConfig
from .errors import ConfigError, UnknownScenarioError, WingLQGError
from .reference import compare_pole_table


def _sorted_poles(eigs):
    eigs = np.asarray(eigs, dtype=complex)
    order = np.lexsort((eigs.real, np.abs(eigs.imag)))
    return eigs[order]


def _config(args) -> RunConfig:
    if args.config:
        try:
            cfg = RunConfig.load(args.config, preset=args.preset)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
    else:
        cfg = RunConfig.from_preset(args.preset or "example16")
    if args.seed is not None:
        cfg = cfg.updated({"sim.seed": args.seed})
    return cfg


def _regulator(cfg: RunConfig, system):
    from .riccati import solve_are

    return solve_are(system.A, system.B, cfg.weights().Q(), cfg.weights().R, labels=system.labels)


def cmd_modes(cfg, args, out: Path):
    from .modal import mode_table

    rows = mode_table(cfg.basis())
    keys = ["kind", "index", "nu_or_m", "eigenvalue", "phi_prime_0", "norm_sq"]
    write_csv(out / "modes.csv", keys, ([r[k] for k in keys] for r in rows))
    return [out / "modes.csv"]


def cmd_poles(cfg, args, out: Path):
    from .kalman import assemble_compensator, design_filter

    system = cfg.modal_system()
    reg = _regulator(cfg, system)
    noise = cfg.noise()
    filt = design_filter(system, noise)
    comp = assemble_compensator(system, reg, filt, noise)
    loops = [("open", system.eigenvalues()), ("closed", reg.closed_loop),
             ("filter", filt.error_poles), ("combined", comp.eigenvalues())]
    rows = [(name, p.real, p.imag) for name, eigs in loops for p in _sorted_poles(eigs)]
    files = [write_csv(out / "poles.csv", ["loop", "re", "im"], rows)]
    if cfg["modal.n"] == 4:
        bp = system.params
        diag = compare_pole_table(system.eigenvalues(), reg.closed_loop, bp.mu * bp.I_y - bp.S_y**2)
        files.append(write_csv(out / "pole_table_diagnostics.csv", list(diag[0].keys()),
                               ([r[k] for k in r] for r in diag)))
    return files


def cmd_lqr(cfg, args, out: Path):
    from .riccati import kernel_gain_profile, run_policy_iteration

    system = cfg.modal_system()
    weights = cfg.weights()
    reg = _regulator(cfg, system)
    pi = run_policy_iteration(weights, system.params, system.basis, system=system)
    ts = cfg["modal.twist_start"]

    def rows():
        for it in (pi.iterates[0], pi.final):
            for rec in it.records(ts):
                yield rec + (it.k,)

    files = [write_csv(out / "riccati.csv", ["family", "n1_or_m1", "n2_or_m2", "i", "j", "value", "iterate"], rows())]
    y = np.linspace(0.0, system.params.L, cfg["sim.grid"])
    K = kernel_gain_profile(pi.final, system, weights, y)
    header = ["y"] + [f"K{r + 1}_{j + 1}" for r in range(2) for j in range(4)]
    files.append(write_csv(out / "gain.csv", header, (np.r_[yi, K[i].ravel()] for i, yi in enumerate(y))))
    P_pi = pi.final.P_std(system.M)
    err = float(np.max(np.abs(P_pi - reg.P)) / np.max(np.abs(reg.P)))
    print(f"ARE relative residual {reg.relative_residual:.3e}; policy iteration "
          f"{len(pi.iterates) - 1} steps, converged={pi.converged}, relative gap {err:.3e}")
    return files


def cmd_kalman(cfg, args, out: Path):
    from .kalman import design_filter

    system = cfg.modal_system()
    filt = design_filter(system, cfg.noise())
    files = [
        write_csv(out / "filter_gain.csv", ["state", "K1", "K2"],
                  ((lab,) + tuple(filt.K[i]) for i, lab in enumerate(system.labels))),
        write_csv(out / "error_poles.csv", ["re", "im"], ((p.real, p.imag) for p in _sorted_poles(filt.error_poles))),
    ]
    if args.sim:
        from .sim import error_field_rows, run_scenario

        if cfg.preset != "example16":
            raise ConfigError("--sim is available for the example16 preset only")
        res = run_scenario("example16-filter-error", config=cfg)
        y = np.linspace(0.0, system.params.L, cfg["sim.grid"])
        files.append(write_csv(out / "error_field.csv", ["t", "y", "w_err", "theta_err"],
                               error_field_rows(res.trace, y)))
    return files


def cmd_aero(cfg, args, out: Path):
    from .aero import design_combined_lqr
    from .sim import full_state_model, integrate

    comb = cfg.combined_system(args.coupling)
    files = []
    nb = 4 * comb.N
    open_eigs = comb.eigenvalues()
    rows = [("open", p.real, p.imag) for p in _sorted_poles(open_eigs)]
    reg = design_combined_lqr(comb, cfg.combined_weight(), cfg.weights().R)
    rows += [("closed", p.real, p.imag) for p in _sorted_poles(reg.closed_loop)]
    files.append(write_csv(out / "combined_poles.csv", ["loop", "re", "im"], rows))
    trace = integrate(full_state_model(comb, reg), cfg.sim_config())
    header = ["t"] + comb.labels[nb:]
    files.append(write_csv(out / "aero_states.csv", header,
                           (np.r_[t, row[nb:]] for t, row in zip(trace.times, trace.states))))
    print(f"combined model: {comb.n_states} states, coupling {comb.coupling}; "
          f"closed-loop abscissa {reg.closed_loop.real.max():.6g}")
    return files


def cmd_sim(cfg, args, out: Path):
    from .sim import run_scenario, scenario_name

    feedback = args.feedback or cfg["sim.feedback"]
    name = scenario_name(cfg.preset, feedback)
    res = run_scenario(name, config=cfg, output_dir=out)
    return list(res.files.values())


COMMANDS = {
    "modes": (cmd_modes, "modal roots, eigenvalues and norms"),
    "poles": (cmd_poles, "open-loop, regulator, filter and compensator spectra"),
    "lqr": (cmd_lqr, "Riccati kernel tables and spatial feedback gain"),
    "kalman": (cmd_kalman, "steady-state filter gain and error poles"),
    "aero": (cmd_aero, "combined beam and aerodynamic model"),
    "sim": (cmd_sim, "closed-loop simulation"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output-dir", default="./out", help="directory for CSV outputs (default ./out)")
    common.add_argument("--preset", choices=sorted(PRESETS), help="named parameter set")
    common.add_argument("--config", help="flat key = value configuration file")
    common.add_argument("--seed", type=int, help="noise seed for simulations")
    parser = argparse.ArgumentParser(prog="wing-lqg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        if name == "kalman":
            p.add_argument("--sim", action="store_true", help="also simulate and write error_field.csv")
        if name == "aero":
            p.add_argument("--coupling", choices=["one-way", "two-way"])
        if name == "sim":
            p.add_argument("--feedback", choices=["full-state", "lqg"])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = Path(args.output_dir)
    try:
        cfg = _config(args)
        func = COMMANDS[args.command][0]
        files = func(cfg, args, out)
        write_text(out / "config.txt", cfg.serialize())
    except (ConfigError, UnknownScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except WingLQGError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
