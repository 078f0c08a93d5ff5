"""Command-line surface: simulate, synthesize, tradeoff and verify."""

import argparse
import logging
import math
import sys

import numpy as np

import chsh_eval
import synthesis
from config_manager import ConfigManager
from errors import DomainError
from protocol_model import Variant
from report_writer import ReportWriter
from sequential_engine import ProtocolConfig, run_protocol
from verify_suite import FAULTS, SUITES, VerifySuite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_DOMAIN = 2
EXIT_INFEASIBLE = 3
EXIT_USAGE = 64

# Ten-digit radians such as 0.7853981634 overshoot π/4 in the last place.
ANGLE_SNAP = 1e-9

SIMULATE_COLUMNS = ["index", "chsh_closed_form", "chsh_bruteforce", "abs_diff", "violated"]
SYNTHESIZE_COLUMNS = [
    "index",
    "s",
    "threshold",
    "chsh_closed_form",
    "chsh_bruteforce",
    "margin",
    "series_bound",
    "violated",
]
TRADEOFF_COLUMNS = ["curve", "x", "eta_critical"]
VERIFY_COLUMNS = ["suite", "passed", "trials", "max_deviation", "detail"]


def report_error(kind, message):
    text = " ".join(str(message).split())
    print(f"error: kind={kind} message={text}", file=sys.stderr)


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        report_error("usage", message)
        self.exit(EXIT_USAGE)


def _alphas(text):
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def _samples(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 2:
        raise argparse.ArgumentTypeError("at least 2 samples are needed")
    return value


def _float_or_auto(text):
    if text == "auto":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got {text!r}") from None


def _angle(value, degrees, bound):
    if degrees:
        value = math.radians(value)
    if bound < value <= bound + ANGLE_SNAP:
        return bound
    return value


def _add_output_flags(parser, formats=("csv", "json")):
    parser.add_argument("--format", choices=formats, default="csv")
    parser.add_argument("--out", default=None, help="output path (default: standard output)")


def build_parser():
    parser = ArgumentParser(
        prog="nlshare",
        description="Sequential CHSH nonlocality sharing: simulation and sharpness synthesis.",
    )
    parser.add_argument("--config", default=None, help="path of the JSON config file")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", help="CHSH value of every Bob in a chain")
    simulate.add_argument("--scheme", choices=[v.value for v in Variant], default=Variant.PPM3.value)
    simulate.add_argument("--k", type=int, required=True)
    simulate.add_argument("--delta", type=float, required=True)
    theta = simulate.add_mutually_exclusive_group(required=True)
    theta.add_argument("--theta", type=float)
    theta.add_argument("--theta-rule", choices=["t1", "max-ent"])
    simulate.add_argument("--v", type=float, default=None)
    simulate.add_argument("--alphas", type=_alphas, required=True)
    simulate.add_argument("--oracle", action="store_true", help="add the density-matrix column")
    simulate.add_argument("--tolerance", type=float, default=None)
    simulate.add_argument("--degrees", action="store_true")
    _add_output_flags(simulate)
    simulate.set_defaults(handler=cmd_simulate)

    synthesize = commands.add_parser("synthesize", help="sharpness sequence for k Bobs")
    synthesize.add_argument("--theorem", choices=["1", "2"], required=True)
    synthesize.add_argument("--k", type=int, required=True)
    synthesize.add_argument("--delta", type=_float_or_auto, required=True)
    synthesize.add_argument("--epsilon", type=float, default=None)
    synthesize.add_argument("--alpha1", type=_float_or_auto, default="auto")
    synthesize.add_argument("--v", type=float, default=None)
    synthesize.add_argument("--oracle", action="store_true")
    synthesize.add_argument("--degrees", action="store_true")
    _add_output_flags(synthesize, ("csv", "json", "alphas"))
    synthesize.set_defaults(handler=cmd_synthesize)

    tradeoff = commands.add_parser("tradeoff", help="critical unsharpness against ⟨{A0,A1}⟩")
    tradeoff.add_argument("--curve", choices=["a", "b", "both"], default="both")
    tradeoff.add_argument("--samples", type=_samples, default=201)
    _add_output_flags(tradeoff)
    tradeoff.set_defaults(handler=cmd_tradeoff)

    verify = commands.add_parser("verify", help="run the seeded invariant suites")
    verify.add_argument("--seed", type=int, default=None)
    verify.add_argument("--trials", type=int, default=None)
    verify.add_argument("--tolerance", type=float, default=None)
    verify.add_argument("--suite", action="append", choices=SUITES, default=None)
    verify.add_argument("--inject-fault", choices=FAULTS, default=None, help=argparse.SUPPRESS)
    _add_output_flags(verify)
    verify.set_defaults(handler=cmd_verify)

    return parser


def _writer(args, config):
    return ReportWriter(args.format, config.significant_digits, config.report_timestamps)


def _emit(args, config, columns, rows, document, tolerance):
    writer = _writer(args, config)
    document["metadata"] = writer.metadata(tolerance)
    writer.write(writer.render(columns, rows, document), args.out)


def cmd_simulate(args, config):
    variant = Variant(args.scheme)
    delta = _angle(args.delta, args.degrees, math.pi / 2)
    if args.theta_rule == "t1":
        theta = math.pi / 4 - delta / 2
    elif args.theta_rule == "max-ent":
        theta = math.pi / 4
    else:
        theta = _angle(args.theta, args.degrees, math.pi / 4)

    if variant is Variant.PPM3:
        if args.v not in (None, 1.0):
            raise DomainError("The ppm scheme fixes v = 1")
        v = 1.0
    elif args.v is None:
        raise DomainError(f"The {variant.value} scheme needs --v")
    else:
        v = args.v
    tolerance = config.violation_tolerance if args.tolerance is None else args.tolerance
    if args.k < 1:
        raise DomainError(f"k must be a positive integer, got {args.k}")
    if len(args.alphas) != args.k:
        raise DomainError(f"Expected {args.k} sharpness values, got {len(args.alphas)}")

    closed = []
    for j in range(1, args.k + 1):
        prefix = args.alphas[:j]
        if variant is Variant.PPM3:
            closed.append(chsh_eval.closed_form_ppm(j, delta, theta, prefix))
        else:
            closed.append(chsh_eval.closed_form_general(j, delta, theta, v, prefix, variant))

    brute = [None] * args.k
    if args.oracle:
        brute = run_protocol(ProtocolConfig.uniform(args.k, delta, theta, variant, args.alphas, v)).chsh_values

    rows = []
    for j, (value, oracle) in enumerate(zip(closed, brute), start=1):
        rows.append(
            {
                "index": j,
                "chsh_closed_form": value,
                "chsh_bruteforce": oracle,
                "abs_diff": None if oracle is None else abs(value - oracle),
                "violated": value - 2 > tolerance,
            }
        )

    document = {
        "command": "simulate",
        "config": {
            "scheme": variant.value,
            "k": args.k,
            "delta": delta,
            "theta": theta,
            "v": v,
            "alphas": args.alphas,
            "oracle": args.oracle,
        },
        "rows": rows,
    }
    _emit(args, config, SIMULATE_COLUMNS, rows, document, tolerance)
    return EXIT_OK


def cmd_synthesize(args, config):
    theorem = synthesis.Theorem.parse(args.theorem)
    epsilon = config.epsilon if args.epsilon is None else args.epsilon
    alpha1 = None if args.alpha1 == "auto" else args.alpha1
    if theorem is synthesis.Theorem.T2 and args.v is None:
        raise DomainError("Theorem 2 needs --v")

    if args.delta == "auto":
        delta = synthesis.auto_delta(
            theorem, args.k, epsilon, args.v, alpha1, max_concurrency=config.max_concurrency
        )
        if delta is None:
            raise DomainError(f"No δ in the window admits {args.k} violating Bobs")
        logger.info(f"Picked delta={delta:.12g}")
    else:
        bound = math.pi / 2 if theorem is synthesis.Theorem.T1 else math.pi / 4
        delta = _angle(args.delta, args.degrees, bound)

    result = synthesis.synthesize(theorem, args.k, delta, epsilon, args.v, alpha1)
    usable = result.sequence[: len(result.per_bob_chsh)]
    exit_code = EXIT_OK if result.feasible else EXIT_INFEASIBLE

    if args.format == "alphas":
        ReportWriter.write(",".join(repr(float(s)) for s in usable) + "\n", args.out)
        return exit_code

    brute = [None] * len(usable)
    if args.oracle and usable:
        variant = Variant.PPM3 if theorem is synthesis.Theorem.T1 else Variant.TWO_KRAUS
        protocol = ProtocolConfig.uniform(len(usable), delta, result.theta, variant, usable, result.v)
        brute = run_protocol(protocol).chsh_values

    rows = []
    for l, s in enumerate(result.sequence, start=1):
        computed = l <= len(usable)
        rows.append(
            {
                "index": l,
                "s": s,
                "threshold": result.thresholds[l - 1] if l <= len(result.thresholds) else None,
                "chsh_closed_form": result.per_bob_chsh[l - 1] if computed else None,
                "chsh_bruteforce": brute[l - 1] if computed else None,
                "margin": result.per_bob_margin[l - 1] if computed else None,
                "series_bound": result.series_bound[l - 1] if l <= len(result.series_bound) else None,
                "violated": computed and result.per_bob_margin[l - 1] > 0,
            }
        )

    document = {
        "command": "synthesize",
        "config": {
            "theorem": theorem.value,
            "k": args.k,
            "delta": delta,
            "epsilon": epsilon,
            "v": result.v,
            "alpha1": result.alpha1,
        },
        "feasible": result.feasible,
        "infeasible_at": result.infeasible_at,
        "reason": result.reason,
        "theta": result.theta,
        "concurrence": result.concurrence,
        "rows": rows,
    }
    _emit(args, config, SYNTHESIZE_COLUMNS, rows, document, config.violation_tolerance)
    return exit_code


def cmd_tradeoff(args, config):
    curves = ["a", "b"] if args.curve == "both" else [args.curve]
    rows = [
        {"curve": curve, "x": float(x), "eta_critical": chsh_eval.critical_eta_curve(float(x), curve)}
        for curve in curves
        for x in np.linspace(0.0, 2.0, args.samples)
    ]
    document = {
        "command": "tradeoff",
        "config": {"curve": args.curve, "samples": args.samples},
        "rows": rows,
    }
    _emit(args, config, TRADEOFF_COLUMNS, rows, document, config.tolerance)
    return EXIT_OK


def cmd_verify(args, config):
    seed = config.verify_seed if args.seed is None else args.seed
    trials = config.verify_trials if args.trials is None else args.trials
    tolerance = config.tolerance if args.tolerance is None else args.tolerance
    suite = VerifySuite(seed, trials, tolerance, args.inject_fault, config.max_concurrency)
    results = suite.run(args.suite)

    rows = [
        {
            "suite": r.name,
            "passed": r.passed,
            "trials": r.trials,
            "max_deviation": r.max_deviation,
            "detail": r.detail,
        }
        for r in results
    ]
    document = {
        "command": "verify",
        "config": {"seed": seed, "trials": trials, "suites": [r.name for r in results]},
        "rows": rows,
        "passed": all(r.passed for r in results),
    }
    _emit(args, config, VERIFY_COLUMNS, rows, document, tolerance)
    return EXIT_OK if document["passed"] else EXIT_FAILED


def configure_logging(config, verbosity):
    level = {0: config.log_level, 1: "INFO"}.get(verbosity, "DEBUG")
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    config = ConfigManager(args.config)
    configure_logging(config, args.verbose)
    try:
        return args.handler(args, config)
    except DomainError as e:
        report_error("domain", e)
        return EXIT_DOMAIN
