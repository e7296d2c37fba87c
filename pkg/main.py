"""
Main orchestration module for lumpchain.
Parses the command line, runs one subcommand (check, reduce, discover,
oracle, simulate) and emits the run report.
"""

import argparse
import sys
import traceback
from typing import List, Optional, Tuple

from app.discovery import DiscoveryConfig, run_discovery
from app.empirics import (
    RNG_NAME,
    RNG_VERSION,
    empirical_transition_matrix,
    markov_quotient_statistic,
    simulate,
)
from app.oracle import bell_number, brute_force_lumpings
from app.spectral import spectrum_subset_check
from core import config as defaults
from core.chain import commutation_residual, is_lumpable, reduce, validate_stochastic
from core.config import Settings
from core.errors import InputError, LumpChainError, NotDiagonalizable
from core.io import (
    blocks_one_based,
    dumps_report,
    load_matrix,
    load_partition,
    matrix_digest,
    to_jsonable,
    write_text,
)
from core.logger import RunLogger
from core.report import RunReport

COMMANDS = ("check", "reduce", "discover", "oracle", "simulate")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    """Command-line surface; every floating-point choice is an explicit flag."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-m", "--matrix", required=True, help="matrix file (text or JSON)")
    common.add_argument("--tol-validate", type=float, default=defaults.DEFAULT_TOL_VALIDATE)
    common.add_argument("--tol-lump", type=float, default=defaults.DEFAULT_TOL_LUMP)
    common.add_argument("--tol-eig", type=float, default=defaults.DEFAULT_TOL_EIG)
    common.add_argument("--tol-group", type=float, default=defaults.DEFAULT_TOL_GROUP)
    common.add_argument("--tol-element", type=float, default=defaults.DEFAULT_TOL_ELEMENT)
    common.add_argument("--zeta", type=float, default=defaults.DEFAULT_ZETA,
                        help="perturbation applied only to rank-deficient input")
    common.add_argument("--guard", type=_positive_int, default=defaults.DEFAULT_GUARD,
                        help="largest Bell number the oracle will scan")
    common.add_argument("--max-candidates", type=_positive_int,
                        default=defaults.DEFAULT_MAX_CANDIDATES)
    common.add_argument("--max-rotation-patterns", type=_positive_int,
                        default=defaults.DEFAULT_MAX_ROTATION_PATTERNS)
    common.add_argument("--exhaustive-subset-limit", type=_positive_int,
                        default=defaults.DEFAULT_EXHAUSTIVE_SUBSET_LIMIT,
                        help="largest N for breadth-first probing of degenerate eigenspaces")
    mode = common.add_mutually_exclusive_group()
    mode.add_argument("--json", dest="table", action="store_false", help="JSON only (default)")
    mode.add_argument("--table", dest="table", action="store_true",
                      help="also print a human table to stderr")
    common.add_argument("--out", help="write the JSON report here instead of stdout")
    common.add_argument("--logs-dir", help="log directory (default from LUMPCHAIN_LOGS_DIR)")
    common.add_argument("--no-logs", action="store_true", help="disable log files")
    common.set_defaults(table=False)

    parser = argparse.ArgumentParser(
        prog="lumpchain",
        description="Check, reduce and discover strong lumpings of finite Markov chains.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, text in (("check", "test one partition"), ("reduce", "build the quotient chain")):
        cmd = sub.add_parser(name, parents=[common], help=text)
        cmd.add_argument("-p", "--partition", required=True,
                         help='"{1,2}{3}", "0 0 1", a JSON array, or @file')

    sub.add_parser("discover", parents=[common], help="spectral discovery of lumpings")
    sub.add_parser("oracle", parents=[common], help="exhaustive search over all partitions")

    cmd = sub.add_parser("simulate", parents=[common], help="sample a trajectory")
    cmd.add_argument("--x0", type=_positive_int, required=True, help="initial state (1-based)")
    cmd.add_argument("-T", "--steps", type=_positive_int, required=True, help="trajectory length")
    cmd.add_argument("--seed", type=int, required=True)
    cmd.add_argument("-p", "--partition", help="run the lumped Markov-order test on this partition")
    cmd.add_argument("--trajectory-out", help="write states, one 1-based integer per line")
    return parser


class LumpChain:
    """Runs one subcommand and assembles its report."""

    def __init__(self, settings: Settings, logger: RunLogger):
        """
        Args:
            settings: environment settings (thread cap)
            logger: RunLogger for this run
        """
        self.settings = settings
        self.logger = logger
        self.matrix = None

    def run(self, args: argparse.Namespace) -> Tuple[int, RunReport]:
        report = RunReport(command=args.command)
        report.config = self._echo_config(args)
        try:
            self._load_matrix(args, report)
            getattr(self, f"cmd_{args.command}")(args, report)
            exit_code = 0
        except LumpChainError as e:
            exit_code = e.exit_code
            report.error = {"type": type(e).__name__, "message": str(e), **e.payload()}
            self.logger.log_error(f"{type(e).__name__}: {e}")
            print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        except Exception as e:
            exit_code = 2
            report.error = {"type": type(e).__name__, "message": str(e)}
            self.logger.log_error(f"Unexpected error: {e}\n{traceback.format_exc()}")
            print(f"❌ Unexpected error: {e}", file=sys.stderr)

        for warning in report.warnings:
            print(f"⚠️  {warning}", file=sys.stderr)
        return exit_code, report

    def _echo_config(self, args) -> dict:
        config = {
            "tol_validate": args.tol_validate,
            "tol_lump": args.tol_lump,
            "tol_eig": args.tol_eig,
            "tol_group": args.tol_group,
            "tol_element": args.tol_element,
            "zeta": args.zeta,
            "guard": args.guard,
            "max_candidates": args.max_candidates,
            "max_rotation_patterns": args.max_rotation_patterns,
            "exhaustive_subset_limit": args.exhaustive_subset_limit,
            "threads": self.settings.threads,
        }
        if args.command == "simulate":
            config.update({"x0": args.x0, "steps": args.steps, "seed": args.seed})
        return config

    def _load_matrix(self, args, report: RunReport):
        if args.tol_validate <= 0:
            raise InputError(f"--tol-validate must be positive, got {args.tol_validate!r}")
        if args.tol_lump < 0:
            raise InputError(f"--tol-lump must be >= 0, got {args.tol_lump!r}")
        self.matrix = validate_stochastic(load_matrix(args.matrix), args.tol_validate)
        report.input_digest = matrix_digest(self.matrix)
        self.logger.log_info(f"Loaded {self.matrix.n}x{self.matrix.n} matrix from {args.matrix}")

    def _partition(self, args):
        return load_partition(args.partition, self.matrix.n)

    def _discovery_config(self, args) -> DiscoveryConfig:
        return DiscoveryConfig(
            element_tol=args.tol_element,
            group_tol=args.tol_group,
            spectral_tol=args.tol_eig,
            zeta=args.zeta,
            max_rotation_patterns=args.max_rotation_patterns,
            max_candidates=args.max_candidates,
            exhaustive_subset_limit=args.exhaustive_subset_limit,
        )

    def cmd_check(self, args, report: RunReport):
        part = self._partition(args)
        verdict = is_lumpable(self.matrix, part, args.tol_lump)
        report.results = {
            "partition": blocks_one_based(part),
            "lumps": part.m,
            "lumpable": verdict.lumpable,
            "max_deviation": verdict.max_deviation,
        }
        self.logger.log_info(f"check {part}: lumpable={verdict.lumpable}")

    def cmd_reduce(self, args, report: RunReport):
        part = self._partition(args)
        reduced = reduce(self.matrix, part, args.tol_lump)
        report.results = {
            "partition": blocks_one_based(part),
            "lumps": part.m,
            "max_deviation": is_lumpable(self.matrix, part, args.tol_lump).max_deviation,
            "reduced_matrix": reduced.matrix,
            "commutation_residual": commutation_residual(self.matrix, reduced),
            "spectrum_subset": spectrum_subset_check(self.matrix, reduced, args.tol_element),
        }
        self.logger.log_info(f"reduce {part}: {part.m}x{part.m} quotient built")

    def cmd_discover(self, args, report: RunReport):
        try:
            result = run_discovery(
                self.matrix,
                self._discovery_config(args),
                lump_tol=args.tol_lump,
                workers=self.settings.threads,
                logger=self.logger,
            )
        except NotDiagonalizable as e:
            if bell_number(self.matrix.n) > args.guard:
                raise
            report.warn(f"{e}; fell back to the exhaustive oracle")
            self.cmd_oracle(args, report)
            report.results = {"source": "oracle", **report.results}
            return

        for warning in result.warnings:
            report.warn(warning)
        es = result.eigensystem
        report.results = {
            "source": "spectral",
            "diagonalizable": es.diagonalizable,
            "condition_estimate": es.condition_estimate,
            "perturbation": result.zeta_applied,
            "eigenvalues": list(es.eigenvalues),
            "groups": [
                {
                    "eigenvalue": g.eigenvalue,
                    "dimension": g.dimension,
                    "kind": g.kind.value,
                    "eigenvectors": [i + 1 for i in g.indices],
                }
                for g in result.groups
            ],
            "complete": result.complete,
            "candidates_examined": result.examined,
            "count": len(result.candidates),
            "lumpings": [self._lumping_entry(c.partition, c.max_deviation, c) for c in result.candidates],
        }

    def cmd_oracle(self, args, report: RunReport):
        found = brute_force_lumpings(
            self.matrix, args.tol_lump, args.guard, workers=self.settings.threads, logger=self.logger
        )
        report.results = {
            "bell_number": bell_number(self.matrix.n),
            "count": len(found),
            "lumpings": [
                self._lumping_entry(p, is_lumpable(self.matrix, p, args.tol_lump).max_deviation)
                for p in found
            ],
        }

    def cmd_simulate(self, args, report: RunReport):
        if args.x0 > self.matrix.n:
            raise InputError(f"--x0 {args.x0} outside 1..{self.matrix.n}")
        traj = simulate(self.matrix, args.x0 - 1, args.steps, args.seed)
        report.results = {
            "rng": {"name": RNG_NAME, "version": RNG_VERSION, "seed": args.seed},
            "length": len(traj),
            "final_state": int(traj.states[-1]) + 1,
            "empirical_transition_matrix": empirical_transition_matrix(traj, self.matrix.n),
        }
        if args.trajectory_out:
            write_text(args.trajectory_out, "".join(f"{s}\n" for s in traj.one_based()))
            report.results["trajectory_file"] = args.trajectory_out

        if args.partition:
            part = self._partition(args)
            test = markov_quotient_statistic(traj, part)
            report.results["quotient_test"] = {
                "diagnostic": True,
                "partition": blocks_one_based(part),
                "statistic": test.statistic,
                "dof": test.dof,
                "pvalue": test.pvalue,
                "lumpable": is_lumpable(self.matrix, part, args.tol_lump).lumpable,
            }
            report.warn("quotient Markov test is diagnostic only; the row-sum check decides lumpability")

    @staticmethod
    def _lumping_entry(part, max_deviation, candidate=None) -> dict:
        entry = {
            "blocks": blocks_one_based(part),
            "assignment": list(part.assignment),
            "lumps": part.m,
            "max_deviation": max_deviation,
            "generating_set": None,
            "complement": None,
        }
        if candidate is not None:
            entry["generating_set"] = [
                {
                    "eigenvalue": g.eigenvalue,
                    "kind": g.kind.value,
                    "eigenvectors": [i + 1 for i in g.indices],
                    "rotated": g.rotated,
                    "coefficients": g.coefficients if g.rotated else None,
                    "vectors": g.vectors.T if g.rotated else None,
                }
                for g in candidate.generating_set
            ]
            entry["complement"] = [i + 1 for i in candidate.complement]
        return entry


def run(argv: Optional[List[str]] = None) -> Tuple[int, Optional[RunReport]]:
    """
    Run the CLI.

    Args:
        argv: argument list without the program name (defaults to sys.argv[1:])

    Returns:
        (exit code, report); the report is None when argument parsing failed
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0), None

    try:
        settings = Settings.from_env()
    except LumpChainError as e:
        print(f"❌ {e}", file=sys.stderr)
        return e.exit_code, None

    logs_dir = None if args.no_logs else (args.logs_dir or settings.logs_dir)
    logger = RunLogger(logs_dir=logs_dir, level=settings.log_level)
    logger.log_command_start(args.command, argv)

    agent = LumpChain(settings, logger)
    exit_code, report = agent.run(args)

    text = dumps_report(report.to_dict())
    if args.out:
        try:
            write_text(args.out, text)
        except LumpChainError as e:
            print(f"❌ {e}", file=sys.stderr)
            exit_code = e.exit_code
    else:
        sys.stdout.write(text)
    if args.table:
        print(report, file=sys.stderr)

    logger.log_run_end(to_jsonable(report.to_dict()), exit_code)
    logger.close()
    return exit_code, report


def main():
    """Entry point for the lumpchain CLI."""
    exit_code, _ = run()
    sys.exit(exit_code)


if __name__ == "__main__":
    main()
