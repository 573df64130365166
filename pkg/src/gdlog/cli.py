"""Command-line front end.

Exit codes: 0 success, 1 parse/validation error, 2 runtime domain
error, 3 not weakly acyclic (check only), 4 illegal input (infer only).
Reports go to stdout as stable JSON (or text where noted); diagnostics
go to stderr. Output is byte-identical for identical inputs, flags, and
seed.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from .analysis import build_dependency_graph, is_weakly_acyclic, to_dot
from .chase import ChaseEngine
from .distributions import DomainError, Registry, RngStream
from .enumeration import EnumerationPolicy, enumerate_outcomes, marginal_bounds
from .model import GdlogError, fact_key, validate_program
from .parser import (
    ParseError,
    load_edb_csv,
    parse_fact_literal,
    parse_facts,
    parse_program,
    render_fact,
)
from .ppdl import IllegalInput, estimate_posterior, exact_posterior
from .translate import render_existential_program, to_existential

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_RUNTIME = 2
EXIT_CYCLIC = 3
EXIT_ILLEGAL = 4


def _log(message: str) -> None:
    # GDLOG_LOG controls stderr verbosity only; results never depend on it
    if os.environ.get("GDLOG_LOG"):
        print(f"gdlog: {message}", file=sys.stderr)


def _build_arg_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gdlog",
        description="Probabilistic Datalog: analyze, translate, sample, "
        "enumerate, and infer.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("program", help="path to the .gdl program")
        sp.add_argument(
            "--edb",
            action="append",
            default=[],
            metavar="SRC",
            help="fact file path, or Rel=path.csv for a header-less CSV; "
            "repeatable",
        )

    sp = sub.add_parser("check", help="decide weak acyclicity")
    common(sp)
    sp.add_argument("--dot", action="store_true", help="emit the dependency graph in DOT")

    sp = sub.add_parser("translate", help="print the existential program")
    common(sp)

    sp = sub.add_parser("sample", help="sample one possible outcome")
    common(sp)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--budget", type=int, default=1_000_000, metavar="N")

    sp = sub.add_parser("enumerate", help="enumerate the outcome distribution")
    common(sp)
    sp.add_argument("--epsilon", type=float, default=0.0, metavar="E")
    sp.add_argument("--nodes", type=int, default=1_000_000, metavar="N")
    sp.add_argument(
        "--support-mass", type=float, default=1.0 - 1e-6, metavar="M",
        help="per-node support coverage for infinite supports",
    )

    sp = sub.add_parser("infer", help="posterior probability of a query fact")
    common(sp)
    sp.add_argument("--query", required=True, metavar="FACT")
    sp.add_argument("--mode", choices=["exact", "mc"], default="exact")
    sp.add_argument("--samples", type=int, default=10_000, metavar="N")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--budget", type=int, default=1_000_000, metavar="N")
    sp.add_argument("--epsilon", type=float, default=0.0, metavar="E")
    sp.add_argument("--nodes", type=int, default=1_000_000, metavar="N")
    return ap


def _load_program(args):
    dists = Registry.with_demo_distributions()
    path = Path(args.program)
    program = parse_program(path.read_text(), dists, str(path))
    report = validate_program(program)
    if not report.ok:
        raise GdlogError(f"{path}: invalid program: {report}")
    _log(
        f"loaded {path}: {len(program.rules)} rules, "
        f"{len(program.constraints)} constraints"
    )
    return program


def _load_edb(args, program):
    facts = set()
    for src in args.edb:
        if "=" in src:
            rel, _, csv_path = src.partition("=")
            with open(csv_path, newline="") as fh:
                facts |= load_edb_csv(rel, fh, program.edb)
        else:
            text = Path(src).read_text()
            facts |= parse_facts(text, program.edb, src)
    _log(f"loaded {len(facts)} input facts")
    return frozenset(facts)


def _facts_json(facts) -> list:
    return [render_fact(f) for f in sorted(facts, key=fact_key)]


def _emit(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True))


def _cmd_check(args) -> int:
    program = _load_program(args)
    result = is_weakly_acyclic(program)
    if args.dot:
        sys.stdout.write(to_dot(build_dependency_graph(program)))
    if result.weakly_acyclic:
        if not args.dot:
            print("WEAKLY-ACYCLIC")
        return EXIT_OK
    if not args.dot:
        print("NOT-WEAKLY-ACYCLIC")
        for e in result.witness:
            print(f"  {e}")
    return EXIT_CYCLIC


def _cmd_translate(args) -> int:
    program = _load_program(args)
    sys.stdout.write(render_existential_program(to_existential(program)))
    return EXIT_OK


def _cmd_sample(args) -> int:
    program = _load_program(args)
    input_facts = _load_edb(args, program)
    engine = ChaseEngine(to_existential(program))
    outcome = engine.sample(input_facts, RngStream(args.seed, 0), args.budget)
    _emit(
        {
            "facts": _facts_json(outcome.facts),
            "log_probability": outcome.log_probability,
            "terminated": outcome.terminated,
        }
    )
    return EXIT_OK


def _cmd_enumerate(args) -> int:
    program = _load_program(args)
    input_facts = _load_edb(args, program)
    policy = EnumerationPolicy(
        mass_epsilon=args.epsilon,
        node_budget=args.nodes,
        support_mass_target=args.support_mass,
    )
    dist = enumerate_outcomes(program, input_facts, policy)
    _emit(
        {
            "outcomes": [
                {"facts": _facts_json(o.facts), "probability": p}
                for o, p in dist.entries
            ],
            "explored_mass": dist.explored_mass,
            "residual_mass": dist.residual_mass,
        }
    )
    return EXIT_OK


def _cmd_infer(args) -> int:
    program = _load_program(args)
    input_facts = _load_edb(args, program)
    ghat = to_existential(program)
    query = parse_fact_literal(args.query, ghat.schema())
    if args.mode == "mc":
        if args.seed is None:
            raise GdlogError("--seed is required with --mode mc")
        est = estimate_posterior(
            program, input_facts, query, args.samples, args.seed, args.budget
        )
        _emit(
            {
                "mode": "mc",
                "query": render_fact(query),
                "point": est.point,
                "std_error": est.std_error,
                "samples_total": est.samples_total,
                "samples_accepted": est.samples_accepted,
                "samples_budget_exhausted": est.samples_budget_exhausted,
                "seed": est.seed,
            }
        )
        return EXIT_OK
    policy = EnumerationPolicy(mass_epsilon=args.epsilon, node_budget=args.nodes)
    posterior = exact_posterior(program, input_facts, policy)
    lo, hi = marginal_bounds(posterior, query)
    _emit(
        {
            "mode": "exact",
            "query": render_fact(query),
            "point": lo,
            "point_upper": hi,
            "explored_mass": posterior.explored_mass,
            "residual_mass": posterior.residual_mass,
        }
    )
    return EXIT_OK


_COMMANDS = {
    "check": _cmd_check,
    "translate": _cmd_translate,
    "sample": _cmd_sample,
    "enumerate": _cmd_enumerate,
    "infer": _cmd_infer,
}


def main(argv=None) -> int:
    args = _build_arg_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        code = _COMMANDS[args.command](args)
        _log(f"{args.command} finished in {time.perf_counter() - started:.3f}s")
        return code
    except (ParseError,) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except IllegalInput as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ILLEGAL
    except DomainError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except GdlogError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
