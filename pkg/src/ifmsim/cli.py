"""ifm-sim: run IFM circuit scenarios, stage-count sweeps and self-checks.

Exit codes: 0 success, 1 configuration error, 2 verification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import fields

from . import scenarios as S
from .fock import FockError
from .measurement import MeasurementError

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY = 0, 1, 2
SEED_ENV = "IFM_SIM_SEED"

RUN_EPILOG = f"""\
CSV reports start with '# config.<key>=<value>' and '# summary.<key>=<value>'
lines, followed by the columns: {', '.join(S.CSV_COLUMNS)}.
  outcome      computational-basis bits of the output qubits (Bell bits x z for
               bell_measure, target rail bit for ifm_gate) or 'lost'
  probability  exact probability from branch enumeration (empty if not enumerable)
  count        number of shots with this outcome
  frequency    count / shots
Numbers carry 12 significant digits. Inputs: a bit string ('01'), a Bell state
('phi+', 'phi-', 'psi+', 'psi-'), '+'/'-' for one qubit, or comma-separated
complex amplitudes ('0.6,0.8j').
"""

SWEEP_EPILOG = f"Columns: {', '.join(S.SWEEP_COLUMNS)}. p_success_formula is cos^(2N)(pi/2N)."


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    try:
        return int(raw) if raw else 0
    except ValueError:
        raise S.ConfigError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ifm-sim", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one circuit scenario", epilog=RUN_EPILOG,
                         formatter_class=argparse.RawDescriptionHelpFormatter)
    run.add_argument("--config", help="JSON file with scenario fields; flags override it")
    run.add_argument("--circuit", choices=S.CIRCUITS)
    run.add_argument("--mode", choices=("ideal", "finite"))
    run.add_argument("--stages", type=int, help="beam splitters per IFM gate (finite mode)")
    run.add_argument("--input", help="input state")
    run.add_argument("--object", choices=("present", "absent"), help="ifm_gate only")
    run.add_argument("--shots", type=int)
    run.add_argument("--seed", type=int, help=f"root seed (default: ${SEED_ENV} or 0)")
    run.add_argument("--format", choices=("csv", "json"))
    run.add_argument("--out", help="report path (stdout if omitted)")
    run.add_argument("--jobs", type=int, default=1, help="worker processes for shots")

    sweep = sub.add_parser("sweep", help="survival probability over stage counts", epilog=SWEEP_EPILOG)
    sweep.add_argument("--stages", default="1,2,5,10,20,50,100,1000", help="comma-separated N values")
    sweep.add_argument("--circuit", choices=("ifm_gate", "bell_gen"), default="ifm_gate")
    sweep.add_argument("--object", choices=("present", "absent"), default="present")
    sweep.add_argument("--format", choices=("csv", "json"), default="csv")
    sweep.add_argument("--out")
    sweep.add_argument("--jobs", type=int, default=1)

    verify = sub.add_parser("verify", help="run the built-in consistency checks")
    verify.add_argument("--seed", type=int)
    return parser


def scenario_from_args(args: argparse.Namespace) -> S.ScenarioConfig:
    values: dict = {"seed": _default_seed()}
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise S.ConfigError(f"cannot read config file: {exc}") from None
        known = {f.name for f in fields(S.ScenarioConfig)}
        unknown = set(loaded) - known
        if unknown:
            raise S.ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        values.update(loaded)
    for name in ("circuit", "mode", "stages", "input", "object", "shots", "seed", "format", "out"):
        v = getattr(args, name)
        if v is not None:
            values[name] = v
    config = S.ScenarioConfig(**values)
    config.validate()
    return config


def _run(args) -> int:
    config = scenario_from_args(args)
    report = S.run_scenario(config, jobs=args.jobs)
    text = S.write_report(report, config.format, config.out)
    if not config.out:
        sys.stdout.write(text)
    return EXIT_OK


def _sweep(args) -> int:
    try:
        n_values = [int(tok) for tok in args.stages.split(",") if tok.strip()]
    except ValueError:
        raise S.ConfigError(f"bad stage list {args.stages!r}") from None
    rows = S.sweep_n(n_values, args.circuit, args.object == "present", jobs=args.jobs)
    text = S.render_sweep(rows, args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _verify(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    results = S.verify_all(seed)
    failed = [name for name, ok, _ in results if not ok]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_VERIFY if failed else EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _run, "sweep": _sweep, "verify": _verify}[args.command]
    try:
        return handler(args)
    except (S.ConfigError, FockError, MeasurementError) as exc:
        print(f"ifm-sim: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
