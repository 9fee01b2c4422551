import argparse
import json
import sys
from typing import List, Optional

from loguru import logger as lg

from cavity_swap.common import InvalidConfiguration, InvalidState, NumericalFailure, OutputError, write_text_atomic, \
    ensure_writable
from cavity_swap.constants import DEFAULT_B, ExitCode, Scenario, SzConvention, EvolutionModel, OutputFormat
from cavity_swap.harness import SweepSpec, ProtocolExperimentService, load_sweep_spec, b_grid, refine_grid, \
    records_to_frame, write_records, format_validity_report, run_invariant_suite


def _common_arguments() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="JSON experiment configuration")
    parent.add_argument("--out", help="output file path")
    parent.add_argument("--format", choices=[f.value for f in OutputFormat], help="output format")
    parent.add_argument("--cutoff", type=int, help="Fock cutoff d per cavity")
    parent.add_argument("--n-pairs", type=int, help="number of cavity pairs N")
    parent.add_argument("--no-dissipation", action="store_true", help="switch every decoherence rate off")
    parent.add_argument("--sz-convention", choices=[c.value for c in SzConvention], help="normalisation of Sz")
    parent.add_argument("--model", choices=[m.value for m in EvolutionModel], help="evolution model")
    parent.add_argument("--workers", type=int, help="worker processes for sweeps")
    verbosity = parent.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings only")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parent = _common_arguments()
    parser = argparse.ArgumentParser(prog="cavity-swap",
                                     description="Simultaneous state swap and EPR-pair generation between two "
                                                 "sets of cavities coupled through one qubit")
    commands = parser.add_subparsers(dest="command", required=True)

    sweep = commands.add_parser("sweep", parents=[parent], help="fidelity versus b for the swap scenarios")
    sweep.add_argument("--b", type=float, nargs="+", help="explicit b values")
    sweep.add_argument("--b-min", type=float)
    sweep.add_argument("--b-max", type=float)
    sweep.add_argument("--b-steps", type=int, default=11)
    sweep.add_argument("--fine", action="store_true", help="double the density of the b grid")
    sweep.add_argument("--scenario", nargs="+", choices=[s.value for s in Scenario if s != Scenario.CUSTOM])

    point = commands.add_parser("point", parents=[parent], help="one swap run at a single b and scenario")
    point.add_argument("--b", type=float, default=DEFAULT_B)
    point.add_argument("--scenario", default=Scenario.I.value,
                       choices=[s.value for s in Scenario if s != Scenario.CUSTOM])

    epr = commands.add_parser("epr", parents=[parent], help="simultaneous EPR-pair generation")
    epr.add_argument("--b", type=float, default=DEFAULT_B)
    epr.add_argument("--time-ns", type=float, help="evolution time in ns (default pi / (4 lambda))")

    check = commands.add_parser("check", parents=[parent], help="dispersive-regime validity check")
    check.add_argument("--b", type=float, default=DEFAULT_B)

    commands.add_parser("selftest", parents=[parent], help="run the physics invariant suite")
    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    lg.remove()
    level = "DEBUG" if args.verbose else "WARNING" if args.quiet else "INFO"
    lg.add(sys.stderr, level=level)


def _spec_from_args(args: argparse.Namespace) -> SweepSpec:
    spec = load_sweep_spec(args.config)
    overrides = {
        'fock_cutoff': args.cutoff,
        'n_pairs': args.n_pairs,
        'sz_convention': args.sz_convention,
        'model': args.model,
        'max_workers': args.workers,
        'output_path': args.out,
        'output_format': args.format,
    }
    if args.no_dissipation:
        overrides['decoherence_enabled'] = False
    if args.command == "sweep":
        if args.b:
            overrides['b_values'] = tuple(args.b)
        elif args.b_min is not None or args.b_max is not None:
            if args.b_min is None or args.b_max is None:
                raise InvalidConfiguration("--b-min and --b-max must be given together")
            overrides['b_values'] = b_grid(args.b_min, args.b_max, args.b_steps)
        if args.scenario:
            overrides['scenarios'] = tuple(args.scenario)
    spec = spec.with_overrides(**overrides)
    if getattr(args, 'fine', False):
        spec = spec.with_overrides(b_values=refine_grid(spec.b_values))
    return spec


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        print(text)
    else:
        write_text_atomic(out, text + "\n")


def _run(args: argparse.Namespace) -> ExitCode:
    spec = _spec_from_args(args)
    service = ProtocolExperimentService(spec.max_workers)
    if spec.output_path is not None:
        ensure_writable(spec.output_path)

    if args.command == "sweep":
        records = service.run_fidelity_sweep_raw(spec)
        if spec.output_path is None:
            print(records_to_frame(records).to_string(index=False))
        return ExitCode.SUCCESS

    if args.command == "point":
        record = service.run_swap_point(args.b, Scenario(args.scenario), spec)
        if spec.output_path is None:
            print(records_to_frame([record]).to_string(index=False))
        else:
            write_records([record], spec.output_path, spec.output_format)
        return ExitCode.SUCCESS

    if args.command == "epr":
        t_final = None if args.time_ns is None else args.time_ns * 1e-9
        record = service.run_epr_generation(spec.n_pairs, args.b, spec, t_final)
        if spec.output_path is None:
            print(json.dumps(record.to_row(), indent=2))
        else:
            write_records([record], spec.output_path, OutputFormat.JSON)
        return ExitCode.SUCCESS

    if args.command == "check":
        report = service.run_validity_check(args.b, spec)
        if spec.output_format == OutputFormat.JSON:
            _emit(json.dumps(dict(report.to_dict(), b=args.b), indent=2), spec.output_path)
        else:
            _emit(format_validity_report(args.b, report), spec.output_path)
        return ExitCode.SUCCESS

    results = run_invariant_suite(fock_cutoff=spec.fock_cutoff)
    lines = [f"[{'PASS' if r.passed else 'FAIL'}] {r.name}: {r.detail}" for r in results]
    _emit("\n".join(lines), spec.output_path)
    return ExitCode.SUCCESS if all(r.passed for r in results) else ExitCode.NUMERICAL_FAILURE


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args)
    try:
        return int(_run(args))
    except (InvalidConfiguration, OutputError) as e:
        lg.error(e.message)
        return int(ExitCode.INVALID_CONFIG)
    except FileNotFoundError as e:
        lg.error(str(e))
        return int(ExitCode.INVALID_CONFIG)
    except (NumericalFailure, InvalidState) as e:
        lg.error(e.message)
        if isinstance(e, NumericalFailure) and e.diagnostics:
            lg.error(f"Diagnostics: {e.diagnostics}")
        return int(ExitCode.NUMERICAL_FAILURE)


if __name__ == "__main__":
    sys.exit(main())
