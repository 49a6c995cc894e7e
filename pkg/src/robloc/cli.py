"""Command-line entry point: ``robloc <command> ...``.

Reports are JSON with sorted keys, a ``format_version`` field and the
configuration that produced them, so identical inputs give identical bytes.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any, Sequence

from robloc.engine import AlwaysProbe, GreedyRobber, RandomRobber, ScriptedRobber, play
from robloc.errors import ResourceLimit, RobLocError
from robloc.graph import Graph, edge, min_maximal_matching, parse_graph_text, subdivide
from robloc.matching import build_matching_strategy, matching_report
from robloc.solver import (
    DEFAULT_MAX_STATES as SOLVER_MAX_STATES,
    DEFAULT_MAX_VERTICES,
    decide_locatable,
    evasion_certificate,
    extract_strategy,
    verify_certificate,
)
from robloc.unequal import build_unequal_strategy
from robloc.verify import (
    DEFAULT_MAX_STATES as VERIFY_MAX_STATES,
    adversarial_verify,
    check_mmm_lemma,
    enumerate_connected_graphs,
)

FORMAT_VERSION = 1
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_INCONCLUSIVE = 3


def _threads() -> int:
    raw = os.environ.get("LOCATOR_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise RobLocError(f"LOCATOR_THREADS must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise RobLocError(f"LOCATOR_THREADS must be a positive integer, got {raw!r}")
    return value


def _config(args: argparse.Namespace) -> dict[str, Any]:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "json_out")}
    cfg["threads"] = _threads()
    return cfg


def _read_lengths(path: str, g: Graph) -> dict:
    lengths = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            u, v, length = (int(p) for p in line.split())
        except ValueError:
            raise RobLocError(f"{path}:{lineno}: expected 'u v L'") from None
        if not g.has_edge(u, v):
            raise RobLocError(f"{path}:{lineno}: ({u}, {v}) is not an edge of the graph")
        lengths[edge(u, v)] = length
    missing = [e for e in g.edges if e not in lengths]
    if missing:
        raise RobLocError(f"{path}: no length for edge {missing[0]}")
    return lengths


def _load(args: argparse.Namespace):
    """Graph plus subdivision: constant ``--m``, a ``--lengths`` file, or lengths in the graph file."""
    g, file_lengths = parse_graph_text(Path(args.graph).read_text(), args.graph)
    if args.m is not None and args.lengths is not None:
        raise RobLocError("give either --m or --lengths, not both")
    if args.m is not None:
        lengths: Any = args.m
    elif args.lengths is not None:
        lengths = _read_lengths(args.lengths, g)
    elif file_lengths is not None:
        lengths = file_lengths
    else:
        raise RobLocError("no subdivision given: use --m, --lengths, or lengths in the graph file")
    return g, subdivide(g, lengths)


def _strategy(args: argparse.Namespace, g: Graph, s):
    name = args.strategy
    if name == "matching":
        m = s.constant_length
        if m is None:
            raise RobLocError("the matching strategy needs a constant subdivision length")
        return build_matching_strategy(g, min_maximal_matching(g), m)
    if name == "unequal":
        return build_unequal_strategy(g, s)
    if name == "optimal":
        result = decide_locatable(s, **_solver_limits(args))
        return extract_strategy(s, result)
    if name.startswith("always:"):
        return AlwaysProbe(s, s.parse_vertex(name.split(":", 1)[1]))
    raise RobLocError(f"unknown strategy {name!r}")


def _solver_limits(args: argparse.Namespace) -> dict[str, int]:
    if args.override_budget:
        return {"max_vertices": 1 << 30, "max_states": 1 << 62}
    return {"max_vertices": DEFAULT_MAX_VERTICES, "max_states": SOLVER_MAX_STATES}


def _robber(spec: str, s):
    kind, _, arg = spec.partition(":")
    if kind == "adversarial":
        return GreedyRobber()
    if kind == "random":
        return RandomRobber(int(arg or 0))
    if kind == "script":
        labels = Path(arg).read_text().split()
        return ScriptedRobber([s.parse_vertex(x) for x in labels])
    raise RobLocError(f"unknown robber {spec!r}")


def _emit(args: argparse.Namespace, text: str) -> None:
    if args.json_out:
        Path(args.json_out).write_text(text)
    else:
        sys.stdout.write(text)


def _report(args: argparse.Namespace, body: dict[str, Any]) -> None:
    out = {"format_version": FORMAT_VERSION, "config": _config(args), **body}
    _emit(args, json.dumps(out, sort_keys=True, indent=2) + "\n")


# -- commands ------------------------------------------------------------

def cmd_solve(args: argparse.Namespace) -> int:
    _, s = _load(args)
    result = decide_locatable(s, **_solver_limits(args))
    body: dict[str, Any] = {"result": result.to_json()}
    if not result.locatable:
        cert = evasion_certificate(s, result)
        body["certificate"] = [[s.label(v) for v in sorted(b)] for b in cert]
        body["certificate_verified"] = verify_certificate(s, cert)
    _report(args, body)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    g, s = _load(args)
    strategy = _strategy(args, g, s)
    trace = play(s, strategy, _robber(args.robber, s), max_rounds=args.bound)
    header = json.dumps({"format_version": FORMAT_VERSION, "config": _config(args)}, sort_keys=True)
    _emit(args, header + "\n" + trace.to_jsonl(s, reveal_robber=True))
    return 0 if trace.captured else EXIT_FAILED


def cmd_verify(args: argparse.Namespace) -> int:
    g, s = _load(args)
    strategy = _strategy(args, g, s)
    max_states = 1 << 62 if args.override_budget else VERIFY_MAX_STATES
    verdict = adversarial_verify(s, strategy, bound=args.bound, max_states=max_states)
    _report(args, {"verdict": verdict.to_json(s)})
    return 0 if verdict.ok else EXIT_FAILED


def cmd_mmm(args: argparse.Namespace) -> int:
    g, _ = parse_graph_text(Path(args.graph).read_text(), args.graph)
    _report(args, {"matching": matching_report(g, min_maximal_matching(g))})
    return 0


def cmd_check_mmm_lemma(args: argparse.Namespace) -> int:
    report = check_mmm_lemma(args.r)
    _report(args, {"report": report})
    return 0 if report["holds"] else EXIT_FAILED


def cmd_sweep(args: argparse.Namespace) -> int:
    rows = []
    failed = False
    for v in range(2, args.max_vertices + 1):
        for g in enumerate_connected_graphs(v):
            matching = min_maximal_matching(g)
            for m in args.m_values:
                strategy = build_matching_strategy(g, matching, m)
                verdict = adversarial_verify(strategy.s, strategy, bound=args.bound)
                failed |= not verdict.ok
                rows.append({
                    "edges": [list(e) for e in g.edges],
                    "k": matching.k,
                    "m": m,
                    "n": g.n,
                    "kind": verdict.kind,
                    "max_rounds": verdict.max_rounds,
                    "max_probes_per_reduction": verdict.max_probes_per_reduction,
                    "reductions": verdict.metrics.get("reductions"),
                    "states_explored": verdict.states_explored,
                })
    _report(args, {"rows": rows, "all_captured": not failed})
    return EXIT_FAILED if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robloc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def instance(p: argparse.ArgumentParser) -> None:
        p.add_argument("--graph", required=True, help="graph text file")
        p.add_argument("--m", type=int, help="constant subdivision length")
        p.add_argument("--lengths", help="file of 'u v L' lines giving per-edge lengths")

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--json-out", help="write the report here instead of stdout")
        p.add_argument("--override-budget", action="store_true",
                       help="lift the solver and verifier size limits")

    p = sub.add_parser("solve", help="decide locatability exactly")
    instance(p)
    common(p)
    p.set_defaults(func=cmd_solve)

    for name, func, default_bound, help_text in (
        ("simulate", cmd_simulate, 1000, "play one game"),
        ("verify", cmd_verify, 100_000, "check a strategy against every robber"),
    ):
        p = sub.add_parser(name, help=help_text)
        instance(p)
        common(p)
        p.add_argument("--strategy", default="matching",
                       help="matching | unequal | optimal | always:<vertex>")
        p.add_argument("--bound", type=int, default=default_bound, help="round limit")
        if name == "simulate":
            p.add_argument("--robber", default="random:0",
                           help="adversarial | random:<seed> | script:<file>")
        p.set_defaults(func=func)

    p = sub.add_parser("mmm", help="minimum maximal matching of a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--json-out")
    p.set_defaults(func=cmd_mmm)

    p = sub.add_parser("check-mmm-lemma", help="graphs on 2r vertices with mmm = r")
    p.add_argument("r", type=int)
    p.add_argument("--json-out")
    p.set_defaults(func=cmd_check_mmm_lemma)

    p = sub.add_parser("sweep", help="matching strategy on every small connected graph")
    p.add_argument("--max-vertices", type=int, default=4)
    p.add_argument("--m", dest="m_values", type=int, nargs="+", default=[12, 13])
    p.add_argument("--bound", type=int, default=100_000)
    p.add_argument("--json-out")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ResourceLimit as exc:
        print(f"robloc: inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except (RobLocError, OSError) as exc:
        print(f"robloc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
