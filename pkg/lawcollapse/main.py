"""Command-line entry point for lawcollapse."""

import argparse
import logging
import sys
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Any, Literal, NoReturn

from lawcollapse import __version__
from lawcollapse.config import get_settings
from lawcollapse.exceptions import DomainError, InputFormatError, LawCollapseError
from lawcollapse.formats import (
    CrmDocument,
    LawDocument,
    PhiDocument,
    ProblemDocument,
    SetDocument,
    dump_json,
    load_capacity,
    load_document,
    load_law,
    load_sample,
)
from lawcollapse.models import CouplingKind, DiscreteLaw, UniformSample
from lawcollapse.rendering import render
from lawcollapse.services.capacities import (
    choquet,
    is_law_invariant,
    is_monotone,
    is_submodular,
    jp_recover_nu,
)
from lawcollapse.services.collapse import (
    choquet_symmetric_linearity,
    expectation_invariance_probe,
    meta_gap_certificate,
    translation_line_test,
)
from lawcollapse.services.laws import ingest_csv
from lawcollapse.services.optimizer import (
    Scenario,
    antimonotone_improve,
    check_scenario,
    counterexample_scenario,
    improvement_shift,
    solve,
)
from lawcollapse.services.rearrange import couple, hl_lower, hl_upper, strict_gap
from lawcollapse.services.repro import report_payload, repro
from lawcollapse.services.riskmeasures import (
    crm_eval,
    es,
    recession_collapse_check,
    support_functional,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_IO = 2


@dataclass(frozen=True)
class RunConfig:
    """Settings of one invocation: tolerance, seed, output form and input paths."""

    tolerance: float
    seed: int
    output: Literal["human", "json"]
    inputs: tuple[str, ...] = ()
    # None keeps the configured collapse-verdict tolerance
    collapse_tolerance: float | None = None

    def __post_init__(self) -> None:
        if not self.tolerance > 0:
            raise DomainError(f"tolerance must be positive, got {self.tolerance}")
        if self.collapse_tolerance is not None and not self.collapse_tolerance > 0:
            raise DomainError(f"tolerance must be positive, got {self.collapse_tolerance}")


@dataclass
class Output:
    payload: dict[str, Any]
    template: str
    context: dict[str, Any]
    exit_code: int = EXIT_OK


class CliParser(argparse.ArgumentParser):
    """Argument parser that exits with status 1 on usage errors."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_DOMAIN, f"{self.prog}: error: {message}\n")


def _values(title: str, values: list[tuple[str, Any]], payload: dict[str, Any]) -> Output:
    return Output(payload, "values.txt.j2", {"title": title, "values": values})


# Handlers


def cmd_law(args: argparse.Namespace, config: RunConfig) -> Output:
    law = ingest_csv(args.path) if args.action == "ingest" else load_law(args.path)
    return Output({"law": law, "mean": law.mean}, "law.txt.j2", {"law": law})


def cmd_hl(args: argparse.Namespace, config: RunConfig) -> Output:
    x, y = load_law(args.x), load_law(args.y)
    lower, upper = hl_lower(x, y), hl_upper(x, y)
    gap = strict_gap(x, y)
    payload = {
        "lower": lower,
        "upper": upper,
        "product_of_means": x.mean * y.mean,
        "strict_gap": list(gap),
    }
    values = [
        ("lower", lower),
        ("upper", upper),
        ("product of means", x.mean * y.mean),
        ("strict gap", gap),
    ]
    return _values("rearrangement bounds", values, payload)


def cmd_couple(args: argparse.Namespace, config: RunConfig) -> Output:
    result = couple(load_law(args.x), load_sample(args.y), CouplingKind(args.kind))
    payload = {
        "kind": result.kind,
        "x_rearranged": result.x_rearranged,
        "inner_product": result.inner_product,
    }
    values = [("rearranged x", result.x_rearranged), ("E[X'Y]", result.inner_product)]
    return _values(f"{result.kind} coupling", values, payload)


def cmd_es(args: argparse.Namespace, config: RunConfig) -> Output:
    value = es(load_law(args.x), args.p)
    return _values("expected shortfall", [(f"ES_{args.p:g}", value)], {"p": args.p, "es": value})


def cmd_crm(args: argparse.Namespace, config: RunConfig) -> Output:
    measure = load_document(args.crm, CrmDocument).build()
    value = crm_eval(measure, load_law(args.x))
    payload = {"generators": len(measure.generators), "value": value}
    return _values("consistent risk measure", [("value", value)], payload)


def cmd_choquet(args: argparse.Namespace, config: RunConfig) -> Output:
    mu = load_capacity(args.capacity)
    result = choquet(mu, load_sample(args.x))
    payload = {"value": result.value, "layer_trace": result.layer_trace}
    values = [("value", result.value)] + [
        (f"mu(X >= {threshold:g})", weight) for threshold, weight in result.layer_trace
    ]
    return _values("Choquet integral", values, payload)


def cmd_capacity_check(args: argparse.Namespace, config: RunConfig) -> Output:
    mu = load_capacity(args.capacity)
    run_all = not (args.submodular or args.law_invariant or args.monotone)
    payload: dict[str, Any] = {"n": mu.n, "kind": mu.kind}
    values: list[tuple[str, Any]] = []
    if run_all or args.monotone:
        payload["monotone"] = is_monotone(mu, config.tolerance)
        values.append(("monotone", payload["monotone"]))
    if run_all or args.submodular:
        check = is_submodular(mu, config.tolerance)
        payload["submodular"] = check.holds
        payload["violation"] = check.violation
        values.append(("submodular", check.holds))
        if check.violation is not None:
            values.append(("violating pair", check.violation))
    if run_all or args.law_invariant:
        payload["law_invariant"] = is_law_invariant(mu, config.tolerance)
        values.append(("law invariant", payload["law_invariant"]))
    return _values(f"{mu.kind} capacity on {mu.n} atoms", values, payload)


def cmd_jp_recover(args: argparse.Namespace, config: RunConfig) -> Output:
    nu = jp_recover_nu(load_capacity(args.capacity), args.alpha)
    table = nu.table()
    payload = {"n": nu.n, "values": {str(mask): v for mask, v in enumerate(table.tolist())}}
    values = [(f"nu[{mask}]", v) for mask, v in enumerate(table.tolist())]
    return _values(f"recovered nu (alpha={args.alpha:g})", values, payload)


def _verdict(title: str, verdict: Any) -> Output:
    return Output({"verdict": verdict}, "verdict.txt.j2", {"title": title, "verdict": verdict})


def cmd_line_test(args: argparse.Namespace, config: RunConfig) -> Output:
    phi = load_document(args.phi, PhiDocument).build()
    z = load_law(args.z)
    a = args.a
    if a is None:
        a = phi(z.affine(1.0, args.x0)) - phi(DiscreteLaw.point(args.x0))
    return _verdict(
        "translation line test",
        translation_line_test(phi, args.x0, z, a, args.t, config.collapse_tolerance),
    )


def cmd_meta_cert(args: argparse.Namespace, config: RunConfig) -> Output:
    phi = load_document(args.phi, PhiDocument).build()
    verdict = meta_gap_certificate(
        phi,
        args.x0,
        load_law(args.z),
        load_law(args.y),
        args.k_max,
        args.offset,
        config.collapse_tolerance,
    )
    return _verdict("meta gap certificate", verdict)


def cmd_choquet_test(args: argparse.Namespace, config: RunConfig) -> Output:
    verdict = choquet_symmetric_linearity(
        load_capacity(args.capacity), tol=config.collapse_tolerance
    )
    return _verdict("Choquet symmetric linearity", verdict)


def cmd_expectation_probe(args: argparse.Namespace, config: RunConfig) -> Output:
    phi = load_document(args.phi, PhiDocument).build()
    verdict = expectation_invariance_probe(
        phi, args.trials, seed=config.seed, tol=config.collapse_tolerance
    )
    return _verdict("expectation invariance probe", verdict)


def cmd_solve(args: argparse.Namespace, config: RunConfig) -> Output:
    problem = load_document(args.problem, ProblemDocument).build()
    report = solve(problem, config.tolerance)
    return Output({"report": report}, "solve.txt.j2", {"report": report})


def cmd_improve(args: argparse.Namespace, config: RunConfig) -> Output:
    problem = load_document(args.problem, ProblemDocument).build()
    x = load_sample(args.x)
    m = improvement_shift(problem, x, config.tolerance)
    improved = antimonotone_improve(problem, x, config.tolerance)
    payload = {
        "shift": m,
        "improved": improved,
        "value_before": problem.phi(x),
        "value_after": problem.phi(improved),
    }
    values = [
        ("shift m", m),
        ("improved", improved),
        ("value before", payload["value_before"]),
        ("value after", payload["value_after"]),
    ]
    return _values("antimonotone improvement", values, payload)


def cmd_counterexample(args: argparse.Namespace, config: RunConfig) -> Output:
    d = UniformSample.of(args.d)
    problem, expected = counterexample_scenario(args.scenario, d, k=args.k, a=args.a, b=args.b)
    check = check_scenario(problem, expected, tol=config.tolerance) if args.check else None
    payload = {
        "scenario": args.scenario,
        "p": problem.p,
        "phi": problem.phi,
        "expected": expected,
        "check": check,
    }
    context = {"scenario": args.scenario, "problem": problem, "expected": expected, "check": check}
    exit_code = EXIT_DOMAIN if check is not None and not check.holds else EXIT_OK
    return Output(payload, "scenario.txt.j2", context, exit_code)


def cmd_set(args: argparse.Namespace, config: RunConfig) -> Output:
    c = load_document(args.set, SetDocument).build()
    if args.action == "support":
        value = support_functional(c, load_law(args.y), config.tolerance)
        return _values("support functional", [("sigma_C(y)", value)], {"support": value})
    verdict = recession_collapse_check(c, config.tolerance)
    values = [("collapsed", verdict.collapsed), ("bounds on E[X]", verdict.bounds)]
    if verdict.membership_consistent is not None:
        values.append(("membership consistent", verdict.membership_consistent))
    return _values("recession cone check", values, {"verdict": verdict})


def cmd_repro(args: argparse.Namespace, config: RunConfig) -> Output:
    reports = repro(args.example)
    payload = report_payload(reports)
    exit_code = EXIT_OK if payload["ok"] else EXIT_DOMAIN
    context = {"reports": reports, "ok": payload["ok"]}
    return Output(payload, "repro.txt.j2", context, exit_code)


# Parser


def build_parser() -> CliParser:
    parser = CliParser(
        prog="lawcollapse",
        description="Law-invariant functionals on finitely supported distributions.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--json", action="store_true", help="emit JSON instead of text")
    parser.add_argument("--seed", type=int, default=None, help="seed for random probes")
    parser.add_argument(
        "--tolerance", type=float, default=None, help="comparison and collapse-verdict tolerance"
    )
    commands = parser.add_subparsers(dest="command", required=True, parser_class=CliParser)

    law = commands.add_parser("law", help="show or ingest a law")
    law.add_argument("action", choices=["show", "ingest"])
    law.add_argument("path")
    law.set_defaults(handler=cmd_law)

    hl = commands.add_parser("hl", help="sharp rearrangement bounds of E[X'Y]")
    hl.add_argument("x")
    hl.add_argument("y")
    hl.set_defaults(handler=cmd_hl)

    cp = commands.add_parser("couple", help="arrange x against the sample y")
    cp.add_argument("x")
    cp.add_argument("y")
    cp.add_argument("--kind", choices=[k.value for k in CouplingKind], default="comonotone")
    cp.set_defaults(handler=cmd_couple)

    es_cmd = commands.add_parser("es", help="Expected Shortfall at level p")
    es_cmd.add_argument("x")
    es_cmd.add_argument("--p", type=float, required=True)
    es_cmd.set_defaults(handler=cmd_es)

    crm = commands.add_parser("crm", help="consistent risk measures")
    crm.add_argument("action", choices=["eval"])
    crm.add_argument("crm")
    crm.add_argument("x")
    crm.set_defaults(handler=cmd_crm)

    ch = commands.add_parser("choquet", help="Choquet integrals")
    ch.add_argument("action", choices=["eval"])
    ch.add_argument("capacity")
    ch.add_argument("x")
    ch.set_defaults(handler=cmd_choquet)

    capacity = commands.add_parser("capacity", help="capacity checks")
    capacity_commands = capacity.add_subparsers(
        dest="capacity_command", required=True, parser_class=CliParser
    )
    check = capacity_commands.add_parser("check")
    check.add_argument("capacity")
    check.add_argument("--submodular", action="store_true")
    check.add_argument("--law-invariant", action="store_true")
    check.add_argument("--monotone", action="store_true")
    check.set_defaults(handler=cmd_capacity_check)
    recover = capacity_commands.add_parser("jp-recover")
    recover.add_argument("capacity")
    recover.add_argument("--alpha", type=float, required=True)
    recover.set_defaults(handler=cmd_jp_recover)

    collapse = commands.add_parser("collapse", help="collapse-to-the-mean detectors")
    collapse_commands = collapse.add_subparsers(
        dest="collapse_command", required=True, parser_class=CliParser
    )
    line = collapse_commands.add_parser("line-test")
    line.add_argument("phi")
    line.add_argument("z")
    line.add_argument("--x0", type=float, default=0.0)
    line.add_argument("--a", type=float, default=None)
    line.add_argument("--t", type=float, nargs="+", default=[-2.0, -1.0, 1.0, 2.0])
    line.set_defaults(handler=cmd_line_test)
    meta = collapse_commands.add_parser("meta-cert")
    meta.add_argument("phi")
    meta.add_argument("z")
    meta.add_argument("y")
    meta.add_argument("--x0", type=float, default=0.0)
    meta.add_argument("--k-max", type=int, default=100)
    meta.add_argument("--offset", type=float, default=0.0)
    meta.set_defaults(handler=cmd_meta_cert)
    symmetric = collapse_commands.add_parser("choquet-test")
    symmetric.add_argument("capacity")
    symmetric.set_defaults(handler=cmd_choquet_test)
    probe = collapse_commands.add_parser("expectation-probe")
    probe.add_argument("phi")
    probe.add_argument("--trials", type=int, default=50)
    probe.set_defaults(handler=cmd_expectation_probe)

    optimize = commands.add_parser("optimize", help="budget-constrained optimisation")
    optimize_commands = optimize.add_subparsers(
        dest="optimize_command", required=True, parser_class=CliParser
    )
    solve_cmd = optimize_commands.add_parser("solve")
    solve_cmd.add_argument("problem")
    solve_cmd.set_defaults(handler=cmd_solve)
    improve = optimize_commands.add_parser("improve")
    improve.add_argument("problem")
    improve.add_argument("x")
    improve.set_defaults(handler=cmd_improve)
    scenario = optimize_commands.add_parser("counterexample")
    scenario.add_argument("--scenario", choices=[s.value for s in Scenario], required=True)
    scenario.add_argument("--d", type=float, nargs="+", required=True)
    scenario.add_argument("--k", type=float, default=None)
    scenario.add_argument("--a", type=float, default=0.0)
    scenario.add_argument("--b", type=float, default=1.0)
    scenario.add_argument("--check", action="store_true", help="verify by exhaustive search")
    scenario.set_defaults(handler=cmd_counterexample)

    law_set = commands.add_parser("set", help="law-invariant convex sets")
    law_set.add_argument("action", choices=["support", "collapse"])
    law_set.add_argument("set")
    law_set.add_argument("y", nargs="?")
    law_set.set_defaults(handler=cmd_set)

    rp = commands.add_parser("repro", help="recompute the worked examples")
    rp.add_argument("example", help="example id or 'all'")
    rp.set_defaults(handler=cmd_repro)

    return parser


def _input_paths(args: argparse.Namespace) -> tuple[str, ...]:
    names = ("path", "x", "y", "z", "crm", "capacity", "phi", "problem", "set")
    return tuple(getattr(args, n) for n in names if isinstance(getattr(args, n, None), str))


def main(argv: Sequence[str] | None = None) -> int:
    settings = get_settings()
    logging.basicConfig(
        level=settings.log_level.upper(),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_DOMAIN

    handler: Callable[[argparse.Namespace, RunConfig], Output] = args.handler
    try:
        config = RunConfig(
            tolerance=settings.tolerance if args.tolerance is None else args.tolerance,
            seed=settings.seed if args.seed is None else args.seed,
            output="json" if args.json else settings.output,
            inputs=_input_paths(args),
            collapse_tolerance=args.tolerance,
        )
        logger.debug(f"Running {args.command} with {config}")
        if args.command == "set" and args.action == "support" and args.y is None:
            raise DomainError("set support needs a law y")
        output = handler(args, config)
    except InputFormatError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except LawCollapseError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DOMAIN

    if config.output == "json":
        sys.stdout.write(dump_json(output.payload))
    else:
        sys.stdout.write(render(output.template, **output.context))
    return output.exit_code


def run() -> None:
    """Console-script entry point."""
    sys.exit(main())


if __name__ == "__main__":
    run()
