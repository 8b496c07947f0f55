"""Command-line entry point: ``opinionmax {select,compare,error-table,equilibrium}``."""

from __future__ import annotations

import argparse
import sys

from . import harness
from .errors import ConfigError, OpinionMaxError
from .linalg import TOLERANCE_MODES

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

DEFAULT_STRATEGIES = "exact,approx,random,top-degree,top-pagerank,top-closeness,top-betweenness"


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _pair(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected two comma-separated counts, e.g. 10,10")
    return int(parts[0]), int(parts[1])


def _common(p: argparse.ArgumentParser, graph_required: bool = True) -> None:
    p.add_argument("--graph", required=graph_required, help="edge-list file")
    p.add_argument("--leaders", help="leader file with 's0: ids' and 's1: ids' lines")
    p.add_argument("--s0", help="comma-separated ids of 0-leaders")
    p.add_argument("--s1", help="comma-separated ids of 1-leaders")
    p.add_argument("--random-leaders", type=_pair, metavar="N0,N1", help="draw leaders at random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eta", type=float, default=0.9)
    p.add_argument("--tolerance", choices=TOLERANCE_MODES, default="practical")
    p.add_argument("--threads", type=int, default=harness.default_threads())
    p.add_argument("--out", default=None, help="output CSV (default: stdout)")
    p.add_argument("--minimize", action="store_true", help="favour the 0-leaders instead")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="opinionmax", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sel = sub.add_parser("select", help="pick k edges with one algorithm")
    _common(sel)
    sel.add_argument("--alg", default="exact", choices=harness.ALGORITHMS)
    sel.add_argument("--k", type=int, required=True)
    sel.add_argument("--eps", type=float)
    sel.add_argument("--jl-constant", type=float)
    sel.add_argument("--oracle-cap", type=int, default=harness.ORACLE_CAP)

    cmp_ = sub.add_parser("compare", help="objective traces of several strategies")
    _common(cmp_)
    cmp_.add_argument("--strategies", default=DEFAULT_STRATEGIES)
    cmp_.add_argument("--k", type=int, required=True)
    cmp_.add_argument("--eps", type=float)
    cmp_.add_argument("--jl-constant", type=float)
    cmp_.add_argument("--oracle-cap", type=int, default=harness.ORACLE_CAP)

    err = sub.add_parser("error-table", help="runtime and relative error, exact vs approx")
    err.add_argument("--graph", action="append", required=True, help="edge-list file (repeatable)")
    err.add_argument("--eps", type=_float_list, default=[0.3, 0.2, 0.1])
    err.add_argument("--k", type=int, default=50)
    err.add_argument("--random-leaders", type=_pair, default=(10, 10), metavar="N0,N1")
    err.add_argument("--seed", type=int, default=0)
    err.add_argument("--eta", type=float, default=0.9)
    err.add_argument("--tolerance", choices=TOLERANCE_MODES, default="practical")
    err.add_argument("--threads", type=int, default=harness.default_threads())
    err.add_argument("--jl-constant", type=float)
    err.add_argument("--out", default=None)

    eq = sub.add_parser("equilibrium", help="equilibrium opinions of all nodes")
    _common(eq)
    return parser


def _leaders(args) -> harness.LeaderSpec:
    given = [args.leaders is not None, args.s0 is not None or args.s1 is not None, args.random_leaders is not None]
    if sum(given) != 1:
        raise ConfigError("give exactly one of --leaders, --s0/--s1, --random-leaders")
    if args.leaders:
        return harness.parse_leader_file(args.leaders)
    if args.random_leaders:
        n0, n1 = args.random_leaders
        return harness.LeaderSpec(n0=n0, n1=n1, seed=args.seed)
    return harness.LeaderSpec(s0=harness.parse_ids(args.s0 or ""), s1=harness.parse_ids(args.s1 or ""))


def _run_config(args, algorithm: str = "exact") -> harness.RunConfig:
    return harness.RunConfig(
        graph_path=args.graph,
        leaders=_leaders(args),
        algorithm=algorithm,
        k=getattr(args, "k", 1),
        eps=getattr(args, "eps", None),
        eta=args.eta,
        seed=args.seed,
        tolerance_mode=args.tolerance,
        output_path=args.out,
        threads=max(1, args.threads),
        minimize=args.minimize,
        oracle_cap=getattr(args, "oracle_cap", harness.ORACLE_CAP),
        jl_constant=getattr(args, "jl_constant", None),
    )


def _dispatch(args) -> None:
    if args.command == "select":
        cfg = _run_config(args, args.alg)
        _, rows = harness.run_select(cfg)
    elif args.command == "compare":
        cfg = _run_config(args)
        strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
        rows = harness.run_compare(cfg, strategies)
    elif args.command == "error-table":
        n0, n1 = args.random_leaders
        rows = harness.run_error_table(
            args.graph,
            args.eps,
            k=args.k,
            n0=n0,
            n1=n1,
            seed=args.seed,
            eta=args.eta,
            tolerance_mode=args.tolerance,
            threads=max(1, args.threads),
            jl_constant=args.jl_constant,
        )
    else:
        cfg = _run_config(args)
        rows = harness.run_equilibrium(cfg)
    harness.write_csv(rows, args.out)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _dispatch(args)
    except OpinionMaxError as exc:
        print(f"opinionmax: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"opinionmax: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"opinionmax: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
