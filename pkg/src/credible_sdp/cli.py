"""Command-line interface.

Subcommands: ``solve`` (run the solver on a problem file, optionally writing
a proof trace and an annotated listing), ``annotate`` (emit the listing
alone), ``check-trace`` (replay a trace against its problem file), and
``demo`` (exercise the whole pipeline on the bundled example).

Exit codes form a total map of outcomes: 0 for a converged run with every
contract passing (or a clean trace check), 2 when contracts failed or a
checked trace has findings, 3 for a divergence-guard abort, 4 for an
iteration-cap abort, and 1 for anything that prevented a run: unreadable
files, malformed problems or traces, bad flags, hash or schema mismatches.

The environment variable CREDIBLE_SDP_TOL overrides the equality tolerance
used by the contract checks (default 1e-9).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .annotator import (
    LISTING_FLAVORS,
    TOOL_VERSION,
    TraceFormatError,
    check_trace,
    emit_annotated_listing,
    write_trace,
)
from .linalg import LsqrContractViolation, NotPositiveDefiniteError
from .problem import ProblemFormatError, SdpProblem, load_problem_file, running_example
from .solver import (
    DEFAULT_NU,
    DEFAULT_SIGMA,
    InitializationError,
    SolveReport,
    SolveStatus,
    SolverOptions,
    sigma_from_nu,
    solve,
)
from .symvec import DimensionError, SymmetryError

ENV_TOL = "CREDIBLE_SDP_TOL"


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage errors on stderr and exits 1, not 2."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _equality_tol_from_env() -> float:
    raw = os.environ.get(ENV_TOL)
    if raw is None or raw.strip() == "":
        return 1e-9
    try:
        value = float(raw)
    except ValueError:
        raise ValueError(f"{ENV_TOL} must be a number, got {raw!r}") from None
    if not value > 0:
        raise ValueError(f"{ENV_TOL} must be positive, got {value}")
    return value


def _build_options(args: argparse.Namespace, prob: SdpProblem) -> SolverOptions:
    """Resolve options from flags, problem file, environment, and defaults.

    --sigma wins outright; --nu without --sigma derives sigma from the
    potential weight; a nu stored in the problem file only sets the potential
    weight and never changes sigma.
    """
    epsilon = args.epsilon if args.epsilon is not None else prob.epsilon
    if args.nu is not None:
        nu = args.nu
    elif prob.nu is not None:
        nu = prob.nu
    else:
        nu = DEFAULT_NU

    sigma_derived = False
    if args.sigma is not None:
        sigma = args.sigma
    elif args.nu is not None:
        sigma = sigma_from_nu(prob.n, args.nu)
        sigma_derived = True
    else:
        sigma = DEFAULT_SIGMA

    return SolverOptions(
        epsilon=epsilon,
        nu=nu,
        sigma=sigma,
        mode=args.mode,
        max_iterations=getattr(args, "max_iterations", None),
        equality_tol=_equality_tol_from_env(),
        sigma_derived=sigma_derived,
    )


def exit_code_for(report: SolveReport) -> int:
    if report.status is SolveStatus.CONVERGED:
        return 0 if report.clean else 2
    if report.status is SolveStatus.INVARIANT_VIOLATION:
        return 2
    if report.status is SolveStatus.DIVERGENCE_GUARD:
        return 3
    return 4  # SolveStatus.ITERATION_CAP


def render_report(report: SolveReport, verbose: bool = False) -> str:
    opts = report.options
    total = len(report.init_records) + sum(len(s.records) for s in report.snapshots)
    failed_ids = sorted({rec.id for rec in report.all_records() if not rec.passed})
    cap = opts.max_iterations if opts.max_iterations is not None else max(10, 10 * report.budget)
    implied = sigma_from_nu(report.problem.n, opts.nu)
    origin = "derived from nu" if report.sigma_derived else "fixed"

    lines = [
        f"status:      {report.status.value}",
        f"iterations:  {report.iterations} (budget {report.budget}, cap {cap})",
        f"final gap:   {report.final_gap:.12e} (epsilon {opts.epsilon:g})",
        f"sigma:       {report.sigma!r} ({origin}; nu={opts.nu!r} would imply {implied:.10g})",
    ]
    if failed_ids:
        lines.append(f"contracts:   {total} records, FAILED: {', '.join(failed_ids)}")
    else:
        lines.append(f"contracts:   {total} records, all passed")
    if report.violation_id is not None:
        lines.append(f"violation:   {report.violation_id} (strict mode abort)")
    lines.append(
        "scope:       records certify the update logic; "
        "numpy.linalg (eigh, lstsq) is trusted as the algebra backend"
    )
    if verbose:
        lines.append("")
        lines.append("smallest contract slack (bound - measured), tightest first:")
        slacks = sorted(report.min_slacks().items(), key=lambda kv: kv[1])
        by_id = {}
        for rec in report.all_records():
            by_id.setdefault(rec.id, rec.anchor)
        for rid, slack in slacks:
            lines.append(f"  {rid:<26} {slack: .6e}  {by_id[rid]}")
        init_failed = [rec.id for rec in report.init_records if not rec.passed]
        if init_failed:
            lines.append(f"initialization: {len(report.init_records)} records, FAILED: {', '.join(init_failed)}")
        else:
            lines.append(f"initialization: {len(report.init_records)} records, all passed")
    return "\n".join(lines)


def cmd_solve(args: argparse.Namespace) -> int:
    prob = load_problem_file(args.problem)
    opts = _build_options(args, prob)
    report = solve(prob, opts)
    if args.trace:
        Path(args.trace).write_bytes(write_trace(report))
    if args.listing:
        listing = emit_annotated_listing(prob, opts, flavor=args.flavor)
        Path(args.listing).write_text(listing.text)
    print(render_report(report, verbose=args.report))
    return exit_code_for(report)


def cmd_annotate(args: argparse.Namespace) -> int:
    prob = load_problem_file(args.problem)
    opts = _build_options(args, prob)
    listing = emit_annotated_listing(prob, opts, flavor=args.flavor)
    if args.listing:
        Path(args.listing).write_text(listing.text)
        print(
            f"wrote {args.listing}: {len(listing.lines)} lines, "
            f"{len(listing.contract_index)} contract annotations"
        )
    else:
        sys.stdout.write(listing.text)
    return 0


def cmd_check_trace(args: argparse.Namespace) -> int:
    prob = load_problem_file(args.problem)
    data = Path(args.trace).read_bytes()
    result = check_trace(data, prob)
    print(result.describe())
    return 0 if result.clean else 2


def cmd_demo(args: argparse.Namespace) -> int:
    prob = running_example()
    opts = SolverOptions(
        epsilon=prob.epsilon,
        mode=args.mode,
        equality_tol=_equality_tol_from_env(),
    )
    report = solve(prob, opts)
    trace = write_trace(report)
    result = check_trace(trace, prob)
    listing = emit_annotated_listing(prob, opts, flavor="pseudo-matlab")
    print(render_report(report, verbose=True))
    print("")
    print(f"trace:       {len(trace)} bytes, independent recheck "
          f"{'clean' if result.clean else 'FAILED'}")
    print(f"listing:     {len(listing.lines)} lines, "
          f"{len(listing.contract_index)} contract annotations")
    ok = report.status is SolveStatus.CONVERGED and report.clean and result.clean
    return 0 if ok else 2


def _add_config_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--epsilon", type=float, default=None,
                     help="convergence threshold on the duality gap (default: problem file)")
    sub.add_argument("--nu", type=float, default=None,
                     help="potential weight; without --sigma it also derives sigma")
    sub.add_argument("--sigma", type=float, default=None,
                     help=f"gap contraction factor per step (default {DEFAULT_SIGMA})")
    sub.add_argument("--mode", choices=("strict", "audit"), default="audit",
                     help="strict aborts on the first failed contract; audit records and continues")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="credible-sdp",
        description="Short-step primal-dual SDP solver with runtime contract "
                    "monitoring, proof traces, and annotated listings.",
    )
    parser.add_argument("--version", action="version", version=f"credible-sdp {TOOL_VERSION}")
    subs = parser.add_subparsers(dest="command", required=True)

    p_solve = subs.add_parser("solve", help="run the solver on a problem file")
    p_solve.add_argument("--problem", required=True, help="problem JSON file")
    _add_config_flags(p_solve)
    p_solve.add_argument("--max-iterations", type=int, default=None,
                         help="iteration cap (default: 10x the certified budget)")
    p_solve.add_argument("--trace", default=None, help="write the proof trace here")
    p_solve.add_argument("--listing", default=None, help="write the annotated listing here")
    p_solve.add_argument("--flavor", choices=LISTING_FLAVORS, default="pseudo-matlab",
                         help="annotation style for --listing")
    p_solve.add_argument("--report", action="store_true",
                         help="include the per-contract slack table in the output")
    p_solve.set_defaults(func=cmd_solve)

    p_ann = subs.add_parser("annotate", help="emit the annotated listing for a problem")
    p_ann.add_argument("--problem", required=True, help="problem JSON file")
    _add_config_flags(p_ann)
    p_ann.add_argument("--flavor", choices=LISTING_FLAVORS, default="pseudo-matlab",
                       help="annotation style")
    p_ann.add_argument("--listing", default=None,
                       help="write the listing here instead of stdout")
    p_ann.set_defaults(func=cmd_annotate)

    p_check = subs.add_parser("check-trace", help="replay a proof trace against its problem")
    p_check.add_argument("--problem", required=True, help="problem JSON file")
    p_check.add_argument("--trace", required=True, help="trace file to check")
    p_check.set_defaults(func=cmd_check_trace)

    p_demo = subs.add_parser("demo", help="solve, trace, re-check, and annotate the bundled example")
    p_demo.add_argument("--mode", choices=("strict", "audit"), default="audit",
                        help="contract failure handling")
    p_demo.set_defaults(func=cmd_demo)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (
        OSError,
        ProblemFormatError,
        TraceFormatError,
        InitializationError,
        NotPositiveDefiniteError,
        LsqrContractViolation,
        SymmetryError,
        DimensionError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
