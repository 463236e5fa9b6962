"""Command line entry point.

Exit codes: 0 success, 1 validation failure, 2 runtime blow-up.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .graph import check_jointly_connected
from .sim.config import ValidationError, from_dict, load_config
from .sim.diagnostics import fit_rate
from .sim.engine import SimulationBlowUp, run
from .sim.output import read_columns, write_outputs
from .sim.scenarios import van_der_pol_document

EXIT_OK, EXIT_INVALID, EXIT_BLOWUP = 0, 1, 2

log = logging.getLogger("adaptive_consensus")


def _add_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dt", type=float, help="override the integration step")
    p.add_argument("--horizon", type=float, help="override the simulation horizon T")


def _simulate(config, out: Path) -> int:
    t0 = time.perf_counter()
    traj = run(config)
    t1 = time.perf_counter()
    paths = write_outputs(out, traj, config)
    errs = traj.v_tilde_norms()[-1].max(), traj.tracking_errors()[-1].max()
    print(f"integrated {len(traj) - 1} steps to T = {traj.t[-1]:g} in {t1 - t0:.1f}s "
          f"(output written in {time.perf_counter() - t1:.1f}s)")
    print(f"final max |vhat_i - v| = {errs[0]:.3e}, max |x_i - x0| = {errs[1]:.3e}")
    for name, path in paths.items():
        print(f"  {name}: {path}")
    return EXIT_OK


def cmd_run(args) -> int:
    config = load_config(args.config, dt=args.dt, T=args.horizon)
    out = Path(args.out or config.out or "out")
    return _simulate(config, out)


def cmd_replicate(args) -> int:
    doc = van_der_pol_document()
    config = from_dict(doc, dt=args.dt, T=args.horizon)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(doc, indent=2) + "\n")
    return _simulate(config, out)


def cmd_check_graph(args) -> int:
    config = load_config(args.config)
    schedule = config.connectivity_schedule()
    epsilon = args.epsilon if args.epsilon is not None else config.epsilon_for(schedule)
    result = check_jointly_connected(config.family, schedule, epsilon)
    print(f"jointly connected: {str(result.connected).lower()} (epsilon = {epsilon:g}, dwell = {schedule.dwell:g})")
    for k, w in enumerate(result.windows):
        used = sorted({schedule.indices[j] for j in range(w.first, w.last + 1)})
        print(f"  window {k}: t in [{w.t_start:g}, {w.t_stop:g}) graphs {used}")
    if not result.connected:
        print(f"  {result.reason}")
        return EXIT_INVALID
    return EXIT_OK


def cmd_fit(args) -> int:
    cols = read_columns(args.csv)
    if args.column not in cols:
        raise ValidationError("--column", f"no column {args.column!r}; available: {', '.join(cols)}")
    if "t" not in cols:
        raise ValidationError("--csv", "file has no 't' column")
    t = cols["t"]
    window = (args.t_from if args.t_from is not None else 0.5 * (t[0] + t[-1]),
              args.t_to if args.t_to is not None else t[-1])
    fit = fit_rate(t, np.abs(cols[args.column]), window)
    print(f"lambda = {fit.lam:.6g}, r_squared = {fit.r_squared:.6f}, "
          f"window = [{fit.window[0]:g}, {fit.window[1]:g}], samples = {fit.samples}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adaptive-consensus",
                                     description="Adaptive leader-following consensus simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate a JSON config and write CSV + SVG output")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    _add_overrides(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("check-graph", help="check joint connectivity of the configured switching graphs")
    p.add_argument("--config", required=True)
    p.add_argument("--epsilon", type=float)
    p.set_defaults(func=cmd_check_graph)

    p = sub.add_parser("fit", help="fit an exponential decay rate to a CSV column")
    p.add_argument("--csv", required=True)
    p.add_argument("--column", required=True)
    p.add_argument("--from", dest="t_from", type=float)
    p.add_argument("--to", dest="t_to", type=float)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("replicate-paper", help="run the built-in four-oscillator scenario")
    p.add_argument("--out", required=True)
    _add_overrides(p)
    p.set_defaults(func=cmd_replicate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SimulationBlowUp as exc:
        print(f"simulation blew up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
