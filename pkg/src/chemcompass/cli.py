"""
Command-line front end.

    chemcompass simulate <config|preset> [--out DIR] [--jobs N] [--dump-config]
    chemcompass yield <config|preset> --grid 0.5,1,2 [--axis k|field]
    chemcompass sensitivity --n0 1e16 --tr 1e-5 --tau 1 ...
    chemcompass check

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.
The output directory is taken from ``--out``, else ``$CHEMCOMPASS_OUTPUT_DIR``,
else the scenario's ``[output] directory``.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import scenario as scenario_io
from .checks import run_checks
from .dynamics import MasterEquation, Theory, default_timestep, evolve
from .entanglement import entanglement_lifetime
from .exceptions import IntegrationError, OracleDisagreement, ValidationError
from .magnetometry import (
    GAMMA_E,
    SensitivityInput,
    bound_check,
    entanglement_lifetime_sensitivity,
    lifetime_precision,
    observable_sensitivity,
    shot_noise_limit,
    singlet_yield_eigenbasis,
    singlet_yield_timedomain,
    snr_limit,
)
from .spinspace import SINGLET, build_hamiltonian, electron_state_operator, singlet_projector

log = logging.getLogger("chemcompass")

OUTPUT_ENV = "CHEMCOMPASS_OUTPUT_DIR"
SIM_HEADER = "t,trace,qs_norm,concurrence_norm,eof_norm"
YIELD_HEADER = "k_or_B,Y_S_eigenbasis,Y_S_timedomain,abs_diff"
DATA_FMT = "%.8e"
YIELD_TOL = 1e-4
STEP_WARNING = 1e6

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def sci(x: float) -> str:
    """Scientific notation, 4 significant digits, unpadded exponent."""
    if math.isinf(x):
        return "inf"
    mantissa, exponent = f"{x:.3e}".split("e")
    return f"{mantissa}e{int(exponent)}"


def _output_dir(args, scen) -> Path:
    if getattr(args, "out", None):
        base = Path(args.out)
    elif os.environ.get(OUTPUT_ENV):
        base = Path(os.environ[OUTPUT_ENV])
    else:
        base = Path(scen.output)
    base.mkdir(parents=True, exist_ok=True)
    return base


def simulate_kind(scen: scenario_io.Scenario, kind: Theory):
    space = scen.space()
    spec = scen.hamiltonian_spec()
    H = build_hamiltonian(space, spec)
    me = scen.master_equation(kind)
    dt = scen.dt or default_timestep(spec.frequency_scale(), me)
    rho0 = electron_state_operator(SINGLET, space)
    return evolve(rho0, me, H, scen.t_max, dt, space=space, points=scen.points)


def write_table(path: Path, header: str, table: np.ndarray) -> None:
    np.savetxt(path, table, fmt=DATA_FMT, delimiter=",", header=header, comments="")


def cmd_simulate(args) -> int:
    scen = scenario_io.load(args.config)
    if args.dump_config:
        sys.stdout.write(scenario_io.dumps(scen))
        return EXIT_OK
    out = _output_dir(args, scen)
    if args.jobs > 1 and len(scen.theories) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            trajs = list(pool.map(simulate_kind, [scen] * len(scen.theories), scen.theories))
    else:
        trajs = [simulate_kind(scen, kind) for kind in scen.theories]

    print(f"{'theory':<12} {'final trace':>12} {'qs_norm(end)':>13} {'T_E':>10}  csv")
    for kind, traj in zip(scen.theories, trajs):
        path = out / f"{scen.name}_{kind.value}.csv"
        write_table(path, SIM_HEADER, traj.table())
        t_e = entanglement_lifetime(traj, scen.threshold)
        qs = traj.qs_norm[np.isfinite(traj.qs_norm)]
        print(
            f"{kind.value:<12} {sci(traj.trace[-1]):>12} {sci(qs[-1]):>13} "
            f"{'none' if t_e is None else sci(t_e):>10}  {path}"
        )
    return EXIT_OK


def _parse_grid(text: str) -> list[float]:
    try:
        grid = [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise UsageError(f"grid must be comma-separated numbers, got {text!r}") from None
    if not grid:
        raise UsageError("grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise UsageError("grid must be strictly ascending")
    return grid


def yield_row(scen: scenario_io.Scenario, axis: str, value: float) -> tuple[float, float]:
    space = scen.space()
    if axis == "k":
        k = value
        spec = scen.hamiltonian_spec()
    else:
        if scen.k_s != scen.k_t or not scen.k_s > 0:
            raise ValidationError("field sweeps need k_s = k_t > 0 in the scenario")
        k = scen.k_s
        spec = scen.hamiltonian_spec(field=value)
    if not k > 0:
        raise ValidationError("yield grid needs positive rates")
    H = build_hamiltonian(space, spec)
    Q_S = singlet_projector(space)
    me = MasterEquation(Theory.TRADITIONAL, k, k)
    dt = default_timestep(spec.frequency_scale(), me)
    # population falls to 1e-8 after about 18.4/k
    steps = 18.4 / (k * dt)
    if steps > STEP_WARNING:
        log.warning(
            "time-domain yield at %s=%g needs ~%.1e RK4 steps; the Larmor frequency "
            "dwarfs the rate, consider a smaller gamma or larger k",
            axis,
            value,
            steps,
        )
    eig = singlet_yield_eigenbasis(H, Q_S, k, space.M).Y_S
    td = singlet_yield_timedomain(
        electron_state_operator(SINGLET, space),
        me,
        H,
        Q_S,
        dt=dt,
    ).Y_S
    return eig, td


def cmd_yield(args) -> int:
    scen = scenario_io.load(args.config)
    if args.dump_config:
        sys.stdout.write(scenario_io.dumps(scen))
        return EXIT_OK
    if args.grid is None:
        raise UsageError("yield needs --grid")
    grid = _parse_grid(args.grid)
    if args.axis == "field" and scen.omega1 is not None:
        raise ValidationError("field sweeps need g1/g2/field in the hamiltonian table")
    rows = []
    for value in grid:
        eig, td = yield_row(scen, args.axis, value)
        rows.append((value, eig, td, abs(eig - td)))
    table = np.array(rows)
    out = _output_dir(args, scen)
    path = out / f"{scen.name}_yield.csv"
    write_table(path, YIELD_HEADER, table)
    print(f"{'k_or_B':>12} {'Y_S eig':>12} {'Y_S time':>12} {'|diff|':>10}")
    for value, eig, td, diff in rows:
        print(f"{sci(value):>12} {eig:>12.9f} {td:>12.9f} {sci(diff):>10}")
    print(f"wrote {path}")
    worst = table[:, 3].max()
    if worst >= YIELD_TOL:
        raise OracleDisagreement(
            f"eigenbasis and time-domain yields differ by {worst:.3g} (tolerance {YIELD_TOL})"
        )
    return EXIT_OK


def sensitivity_rows(args) -> list[tuple[str, str]]:
    inp = SensitivityInput(N0=args.n0, T_r=args.tr, tau=args.tau, snr=args.snr, gamma=args.gamma)
    rows = []
    if None not in (args.n0, args.tr, args.tau):
        rows.append(("shot-noise limit", f"{sci(shot_noise_limit(inp))} G"))
    if None not in (args.snr, args.tr):
        rows.append(("S/N-limited", f"{sci(snr_limit(inp))} G"))
    if (args.delta_o is None) != (args.do_db is None):
        raise UsageError("--delta-o and --do-db must be given together")
    if args.delta_o is not None:
        rows.append(("observable-mediated", f"{sci(observable_sensitivity(args.delta_o, args.do_db))} G"))
    if (args.te is None) != (args.dte_db is None):
        raise UsageError("--te and --dte-db must be given together")
    if args.te is not None:
        if None not in (args.snr, args.tr):
            rows.append(("lifetime precision", f"{sci(lifetime_precision(args.te, args.tr, args.snr))} s"))
            rows.append(
                (
                    "entanglement-lifetime",
                    f"{sci(entanglement_lifetime_sensitivity(inp, args.te, args.dte_db))} G",
                )
            )
        check = bound_check(args.te, args.dte_db, args.gamma)
        verdict = "satisfied" if check.satisfied else "VIOLATED"
        rows.append(("lifetime bound", f"{verdict} (ratio {sci(check.ratio)})"))
    if not rows:
        raise UsageError(
            "nothing to compute: give --n0/--tr/--tau, --snr/--tr, --delta-o/--do-db or --te/--dte-db"
        )
    return rows


def cmd_sensitivity(args) -> int:
    for label, value in sensitivity_rows(args):
        print(f"{label:<24}{value}")
    return EXIT_OK


def cmd_check(args) -> int:
    results = run_checks()
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="chemcompass", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="integrate a scenario under each listed theory")
    p.add_argument("config", help="scenario TOML file or preset name (fig2a, fig2bc, yield-dg)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="theories run in parallel processes")
    p.add_argument("--dump-config", action="store_true", help="print the parsed scenario and exit")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("yield", help="singlet yield over a k or field grid, two routes")
    p.add_argument("config")
    p.add_argument("--grid", help="comma-separated ascending values")
    p.add_argument("--axis", choices=("k", "field"), default="k")
    p.add_argument("--out")
    p.add_argument("--dump-config", action="store_true")
    p.set_defaults(func=cmd_yield)

    p = sub.add_parser("sensitivity", help="field-sensitivity limits")
    p.add_argument("--n0", type=float, help="initial pair number")
    p.add_argument("--tr", type=float, help="reaction time [s]")
    p.add_argument("--tau", type=float, help="total measurement time [s]")
    p.add_argument("--snr", type=float, help="signal-to-noise ratio")
    p.add_argument("--gamma", type=float, default=GAMMA_E, help="gyromagnetic ratio [Hz/G]")
    p.add_argument("--delta-o", type=float, help="precision of a field-dependent observable")
    p.add_argument("--do-db", type=float, help="slope of that observable [per G]")
    p.add_argument("--te", type=float, help="entanglement lifetime [s]")
    p.add_argument("--dte-db", type=float, help="lifetime slope [s/G]")
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("check", help="run the built-in invariant suite")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"chemcompass: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        print(f"chemcompass: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IntegrationError, OracleDisagreement) as exc:
        print(f"chemcompass: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
