"""Command-line entry point: ``ctxlab <subcommand> ...``.

Every subcommand writes deterministic JSON (sorted keys) except ``classify``,
which prints the verdict string. Exit codes: 0 success, 2 malformed input,
3 capacity exceeded, 4 verification failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, balanced_tables
from .entropy import (
    NotInImage,
    Pair,
    ProjectiveContext,
    StateOracle,
    Unique,
    contextual_renyi,
    contextual_shannon,
    find_random_violation,
    reconstruct,
    subadditivity_counterexample,
    von_neumann,
)
from .hierarchy import (
    LP_TOL,
    classify,
    classify_support,
    decide_possibilistic_extendability,
    decide_probabilistic_extendability,
    decide_strong_contextuality,
)
from .io import (
    InputError,
    context_from_json,
    density_from_json,
    density_to_json,
    dumps,
    experiment_from_json,
    load_json,
    model_to_json,
    observable_to_json,
    state_from_json,
    state_to_json,
)
from .model import DEFAULT_CAP, EPS_SUPP, CapacityError, ModelError, Semiring, context_key, support
from .witness import MIXED_TOL, PURITY_TOL, InPn, hardy_witness

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CAPACITY = 3
EXIT_VERIFY = 4


def _positive(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return value


def _cap(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        print(text)
    else:
        Path(path).write_text(text + "\n", encoding="utf-8")


def cmd_classify(args: argparse.Namespace) -> int:
    model = experiment_from_json(load_json(args.input))
    possibilistic = model.semiring is Semiring.BOOLEAN
    if possibilistic:
        verdict = classify_support(model)
    else:
        verdict = classify(model, eps_supp=args.eps_supp, tol=args.tol, cap=args.cap)
    print(verdict.verdict)
    if args.table:
        print(balanced_tables.format_table(model))
    if args.emit_table:
        _write(args.emit_table, dumps(model_to_json(model)))
    if args.emit_certificate:
        supp = model if possibilistic else support(model, args.eps_supp)
        strong = decide_strong_contextuality(supp)
        report = decide_possibilistic_extendability(supp)
        lp = None if possibilistic else decide_probabilistic_extendability(model, tol=args.tol, cap=args.cap)
        cert = {
            "verdict": verdict.verdict,
            "global_assignment": strong.assignment if strong else None,
            "non_extendable": [[context_key(c), s] for c, s in report.non_extendable],
            "global_distribution": lp.to_json() if lp else None,
        }
        _write(args.emit_certificate, dumps(cert))
    return EXIT_OK


def cmd_witness(args: argparse.Namespace) -> int:
    state = state_from_json(load_json(args.input))
    result = hardy_witness(state, tol=args.tol, mixed_tol=args.mixed_tol, verify=args.verify,
                           eps_supp=args.eps_supp)
    if isinstance(result, InPn):
        out = {"verdict": "in_Pn", "type": result.type.to_json(),
               "components": [state_to_json(c) for c in result.components], "verified": True}
        print(dumps(out))
        return EXIT_OK
    out = {"verdict": "witness", "type": None, "verified": result.verified,
           "observables": [[observable_to_json(o) for o in menu] for menu in result.observables],
           "non_extendable": [[context_key(c), s] for c, s in result.non_extendable]}
    print(dumps(out))
    if args.verify and not result.verified:
        return EXIT_VERIFY
    return EXIT_OK


def cmd_entropy(args: argparse.Namespace) -> int:
    rho = density_from_json(load_json(args.input))
    dim = rho.shape[0]
    ctx = context_from_json(load_json(args.context), dim) if args.context else ProjectiveContext.computational(dim)
    out = {"dim": dim, "von_neumann": von_neumann(rho)}
    if args.renyi is None:
        out["entropy"] = contextual_shannon(rho, ctx)
    else:
        out["entropy"] = contextual_renyi(rho, ctx, args.renyi)
        out["order"] = args.renyi
    print(dumps(out))
    return EXIT_OK


def cmd_reconstruct(args: argparse.Namespace) -> int:
    rho = density_from_json(load_json(args.input))
    oracle = StateOracle(rho)
    result = reconstruct(oracle)
    if isinstance(result, NotInImage):
        print(dumps({"verdict": "not_in_image", "reason": result.reason, "queries": oracle.queries}))
        return EXIT_VERIFY
    if isinstance(result, Pair):
        out = {"verdict": "pair", "candidates": [density_to_json(result.first), density_to_json(result.second)],
               "error": float(min(np.linalg.norm(result.first - rho), np.linalg.norm(result.second - rho)))}
    else:
        assert isinstance(result, Unique)
        out = {"verdict": "unique", "case": result.case, "density": density_to_json(result.rho),
               "error": float(np.linalg.norm(result.rho - rho))}
    out["queries"] = oracle.queries
    print(dumps(out))
    return EXIT_OK


def cmd_counterexample(args: argparse.Namespace) -> int:
    if args.random:
        found = find_random_violation(args.seed, trials=args.trials, n1=args.n1, n2=args.n2)
        if found is None:
            print(dumps({"found": False, "seed": args.seed, "trials": args.trials}))
            return EXIT_VERIFY
        print(dumps({"found": True, "seed": found.seed, "trial": found.trial, "A": found.A, "B": found.B,
                     "density": density_to_json(found.rho), "unitary": density_to_json(found.unitary)}))
        return EXIT_OK
    ce = subadditivity_counterexample(args.n1, args.n2)
    out = {"n1": ce.n1, "n2": ce.n2, "A": ce.A, "B": ce.B, "A_formula": ce.A_formula,
           "B_formula": ce.B_formula, "gap": ce.A - ce.B, "columns": list(ce.columns),
           "unitary": density_to_json(ce.unitary)}
    print(dumps(out))
    return EXIT_OK if ce.A > ce.B else EXIT_VERIFY


def cmd_balanced_suite(args: argparse.Namespace) -> int:
    report = balanced_tables.run_suite(trials=args.trials, seed=args.seed)
    print(dumps(report))
    return EXIT_OK if report["ok"] else EXIT_VERIFY


def cmd_gen_state(args: argparse.Namespace) -> int:
    request: dict = {"kind": args.kind}
    for key in ("n", "k", "which", "function", "arity", "bits", "sign"):
        value = getattr(args, key)
        if value is not None:
            request[key] = value
    if args.kind == "random":
        request["seed"] = args.seed
    state = state_from_json(request)
    if args.menus:
        menus = [[{"pauli": p} for p in args.menus] for _ in range(state.n)]
        print(dumps({"state": state_to_json(state), "menus": menus}))
    else:
        print(dumps(state_to_json(state)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ctxlab", description="Contextuality analysis toolkit.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="place a model in the contextuality hierarchy")
    p.add_argument("input", help="model JSON, or state JSON with menus")
    p.add_argument("--tol", type=_positive, default=LP_TOL, help="LP feasibility tolerance")
    p.add_argument("--eps-supp", type=_positive, default=EPS_SUPP, help="support threshold")
    p.add_argument("--cap", type=_cap, default=DEFAULT_CAP, help="maximum number of global assignments")
    p.add_argument("--table", action="store_true", help="print the probability table")
    p.add_argument("--emit-table", metavar="PATH", help="write the model JSON")
    p.add_argument("--emit-certificate", metavar="PATH", help="write the certificate JSON")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("witness", help="product decomposition or Hardy-type witness for a state")
    p.add_argument("input", help="state JSON")
    p.add_argument("--tol", type=_positive, default=PURITY_TOL, help="purity tolerance")
    p.add_argument("--mixed-tol", type=_positive, default=MIXED_TOL, help="maximal-mixedness tolerance")
    p.add_argument("--eps-supp", type=_positive, default=EPS_SUPP)
    p.add_argument("--verify", action=argparse.BooleanOptionalAction, default=True,
                   help="replay the witness through the hierarchy")
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("entropy", help="contextual entropy of a state at a context")
    p.add_argument("input", help="state or density JSON")
    p.add_argument("--context", metavar="PATH", help="context JSON (default: computational basis)")
    p.add_argument("--renyi", type=float, metavar="Q", help="Renyi order instead of Shannon")
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("reconstruct", help="recover a state from its entropy oracle")
    p.add_argument("input", help="state or density JSON backing the oracle")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("counterexample", help="subadditivity failure at an entangled context")
    p.add_argument("--n1", type=int, default=2)
    p.add_argument("--n2", type=int, default=3)
    p.add_argument("--random", action="store_true", help="random search instead of the analytic family")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--trials", type=int, default=10000)
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("chapter3", help="regenerate and check the balanced-state tables")
    p.add_argument("--trials", type=int, default=100, help="random menus per dictatorship state")
    p.add_argument("--seed", type=int, default=1)
    p.set_defaults(func=cmd_balanced_suite)

    p = sub.add_parser("gen-state", help="emit a named state as JSON")
    p.add_argument("kind", choices=["ghz", "dicke", "w", "bell", "balanced", "basis", "random"])
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--which")
    p.add_argument("--function")
    p.add_argument("--arity", type=int)
    p.add_argument("--bits")
    p.add_argument("--sign", type=int)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--menus", nargs="+", metavar="PAULI", help="also emit these Pauli menus for every party")
    p.set_defaults(func=cmd_gen_state)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (InputError, ModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
