"""Command-line entry point.

Every subcommand writes its artifacts into ``--out-dir`` together with one
JSON manifest (``manifest-<command>.json``) holding the parsed
configuration, input digests and the list of outputs.  Exit codes: 0 on
success, 1 when the computation itself fails (e.g. an unattainable girth
floor), 2 for unreadable or invalid input.  ``replay`` reruns a command
from its manifest.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .density import (
    DEFAULT_DELTA,
    DEFAULT_T_MAX,
    DEFAULT_TOLERANCE,
    DecayError,
    de_run,
    threshold,
    verify_decay,
)
from .erasure import ChannelConfig, simulate
from .graphs.lps import LpsParams, find_lps_params, lps_generate
from .graphs.regular import (
    GraphError,
    double_cover,
    edge_coloring,
    girth,
    random_regular_bipartite,
    read_graph,
    split_to_degree,
)
from .graphs.tanner import (
    AlistError,
    node_split,
    protograph_to_partitions,
    read_alist,
    verify_lifting,
    write_alist,
)
from .optimize import OptimizerConfig, optimize
from .protograph import (
    BaseMatrix,
    MatrixFormatError,
    check_chain_constraint,
    design_rate,
    protograph_from_matrix,
    read_base_matrix,
    write_base_matrix,
)

log = logging.getLogger("protoldpc")

EXIT_OK, EXIT_DOMAIN, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    """Bad or unreadable input; maps to exit code 2."""


class DomainError(Exception):
    """The requested computation cannot succeed; maps to exit code 1."""


# -- serialization --------------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _clean(obj):
    """JSON-ready copy with floats rounded to 12 significant digits."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x) or math.isinf(x):
            return str(x)
        return float(_fmt(x))
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class Run:
    """Collects outputs of one invocation and writes its manifest."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.out_dir = Path(args.out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.inputs: dict[str, str] = {}
        self.outputs: list[str] = []
        self.start = time.perf_counter()

    def input(self, path) -> Path:
        p = Path(path)
        if not p.is_file():
            raise InputError(f"{p}: no such file")
        self.inputs[str(p)] = _digest(p)
        return p

    def output(self, name: str) -> Path:
        self.outputs.append(name)
        return self.out_dir / name

    def finish(self) -> Path:
        config = {k: v for k, v in vars(self.args).items() if k != "func"}
        manifest = {
            "command": self.args.command,
            "config": config,
            "seed": config.get("seed"),
            "version": __version__,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "wall_time_s": time.perf_counter() - self.start,
        }
        path = self.out_dir / f"manifest-{self.args.command}.json"
        _write_json(path, manifest)
        return path


def _load_matrix(run: Run, path) -> BaseMatrix:
    p = run.input(path)
    try:
        b = read_base_matrix(p)
        protograph_from_matrix(b)
    except (MatrixFormatError, ValueError) as exc:
        raise InputError(f"{p}: {exc}") from exc
    return b


def _parse_eps_list(text: str) -> list[float]:
    try:
        vals = [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not vals or any(not 0.0 <= v <= 1.0 for v in vals):
        raise argparse.ArgumentTypeError("erasure probabilities must lie in [0, 1]")
    return vals


# -- subcommands ----------------------------------------------------------------


def cmd_threshold(args: argparse.Namespace) -> int:
    run = Run(args)
    b = _load_matrix(run, args.matrix)
    chain = check_chain_constraint(b)
    res = threshold(b, args.tolerance, args.t_max, args.delta)
    record = {
        "matrix_file": str(args.matrix),
        "epsilon_threshold": res.epsilon_threshold,
        "bracket": res.bracket,
        "tolerance": args.tolerance,
        "t_max": args.t_max,
        "delta": args.delta,
        "design_rate": str(design_rate(b)),
        "chain_constraint": {"passed": chain.passed, "offending_checks": chain.offending_checks},
    }
    if args.trace:
        eps = res.bracket[0] if args.trace_epsilon is None else args.trace_epsilon
        trace = de_run(b, eps, args.t_max, args.delta).trace
        _write_csv(run.output("trace.csv"), ["t", "xbar"], enumerate(trace))
        record["trace_file"] = "trace.csv"
        record["trace_epsilon"] = eps
    _write_json(run.output("threshold.json"), record)
    run.finish()
    print(f"threshold {_fmt(res.epsilon_threshold)}")
    if not chain:
        print(f"chain constraint fails at checks {list(chain.offending_checks)}")
    return EXIT_OK


def cmd_optimize(args: argparse.Namespace) -> int:
    run = Run(args)
    try:
        cfg = OptimizerConfig(
            rows=args.rows,
            cols=args.cols,
            population_size=args.population,
            crossover_prob=args.crossover,
            mutation_weight=args.mutation_weight,
            max_generations=args.generations,
            entry_cap=args.entry_cap,
            seed=args.seed,
            tolerance=args.tolerance,
            t_max=args.t_max,
            delta=args.delta,
            final_tolerance=args.final_tolerance,
            parallelism=args.parallelism,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from exc

    def progress(g: int, best: float) -> None:
        log.info("generation %d best %.4f", g, best)

    res = optimize(cfg, progress)
    write_base_matrix(res.best.matrix, run.output("best.txt"))
    _write_csv(run.output("history.csv"), ["generation", "best_fitness"], enumerate(res.history))
    _write_json(
        run.output("result.json"),
        {
            "best_matrix": res.best.matrix,
            "best_fitness": res.best.fitness,
            "final_threshold": res.final_threshold,
            "final_tolerance": cfg.final_tolerance,
            "chain_constraint": check_chain_constraint(res.best.matrix).passed,
            "design_rate": str(design_rate(res.best.matrix)),
            "history": res.history,
            "evaluations": res.evaluations,
            "repairs_with_added_edges": res.repairs_with_added_edges,
            "config": cfg.to_dict(),
        },
    )
    run.finish()
    print(f"best threshold {_fmt(res.final_threshold)}")
    print(res.best.matrix)
    return EXIT_OK


def _source_graph(args: argparse.Namespace, d: int):
    """Colored d-regular bipartite graph from the requested source."""
    if args.source == "lps":
        if args.lps:
            p, q = args.lps
            try:
                params = LpsParams(p, q)
            except GraphError as exc:
                raise InputError(str(exc)) from exc
            if (p + 1) % d:
                raise DomainError(
                    f"LPS degree {p + 1} is not a multiple of d={d}; "
                    "choose other primes or use --source random"
                )
        else:
            try:
                params = find_lps_params(d)
            except GraphError as exc:
                raise DomainError(str(exc)) from exc
        g = lps_generate(params)
        if not g.bipartite:
            g = double_cover(g)
        g = split_to_degree(g, d)
        bound = params.girth_bound
        source = {"kind": "lps", "p": params.p, "q": params.q}
    else:
        if args.half_size is None:
            raise InputError("--source random needs --half-size")
        g = random_regular_bipartite(d, args.half_size, args.girth_floor, args.seed, args.attempts)
        bound = float(args.girth_floor)
        source = {"kind": "random", "d": d, "half_size": args.half_size, "seed": args.seed}
    return edge_coloring(g), bound, source


def cmd_construct(args: argparse.Namespace) -> int:
    run = Run(args)
    b = _load_matrix(run, args.matrix)
    sp = protograph_to_partitions(b)
    try:
        g, bound, source = _source_graph(args, sp.d)
    except GraphError as exc:
        raise DomainError(str(exc)) from exc
    g_src = girth(g)
    t = node_split(g, sp)
    check = verify_lifting(t, b)
    if not check:
        raise DomainError("lifting check failed: " + "; ".join(check.problems))
    g_t = girth(t)
    if g_t < args.girth_floor:
        raise DomainError(f"measured girth {g_t} is below the floor {args.girth_floor}")
    write_alist(t, run.output(args.alist_name))
    _write_json(
        run.output("construct.json"),
        {
            "n": t.variable_count,
            "m": t.check_count,
            "edges": t.edge_count,
            "copies": t.copies,
            "design_rate": str(design_rate(b)),
            "girth_measured": g_t,
            "source_girth": g_src,
            "girth_bound": bound,
            "source": source,
            "source_graph": {"name": g.name, "vertices": g.vertex_count, "degree": g.degree},
            "partitions": sp.to_dict(),
            "base_matrix": b.tolist(),
            "lifting_verified": True,
        },
    )
    run.finish()
    print(f"n={t.variable_count} m={t.check_count} girth={g_t}")
    return EXIT_OK


def _load_any_graph(path: Path):
    if path.suffix == ".alist":
        return read_alist(path)
    return read_graph(path)


def cmd_girth(args: argparse.Namespace) -> int:
    run = Run(args)
    p = run.input(args.graph)
    try:
        g = _load_any_graph(p)
    except (AlistError, ValueError) as exc:
        raise InputError(f"{p}: {exc}") from exc
    value = girth(g)
    _write_json(
        run.output("girth.json"),
        {"graph_file": str(p), "girth": None if math.isinf(value) else int(value), "acyclic": math.isinf(value)},
    )
    run.finish()
    print(f"girth {value if math.isinf(value) else int(value)}")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    run = Run(args)
    p = run.input(args.alist)
    try:
        t = read_alist(p)
    except AlistError as exc:
        raise InputError(f"{p}: {exc}") from exc
    rows = []
    for eps in args.epsilon:
        cfg = ChannelConfig(eps, args.trials, args.seed, args.max_peel_rounds)
        s = simulate(t, cfg, parallelism=args.parallelism)
        lo, hi = s.wilson_interval_95
        rows.append((eps, s.n, s.trials, s.bit_error_rate, s.block_error_rate, lo, hi))
        print(f"eps={_fmt(eps)} bit={_fmt(s.bit_error_rate)} block={_fmt(s.block_error_rate)}")
    _write_csv(
        run.output("simulate.csv"),
        ["epsilon", "n", "trials", "bit_error", "block_error", "ci_lo", "ci_hi"],
        rows,
    )
    run.finish()
    return EXIT_OK


def cmd_verify_decay(args: argparse.Namespace) -> int:
    run = Run(args)
    b = _load_matrix(run, args.matrix)
    try:
        rep = verify_decay(b, args.epsilon, args.t_max)
    except DecayError as exc:
        raise DomainError(str(exc)) from exc
    d = rep.to_dict()
    d.pop("trace", None)
    _write_json(run.output("decay.json"), d)
    if args.trace:
        _write_csv(run.output("decay_trace.csv"), ["t", "xbar"], enumerate(rep.trace))
    run.finish()
    print(f"A={_fmt(rep.A)} R={rep.R} violations={len(rep.violations)} ok={rep.ok}")
    return EXIT_OK if rep.ok else EXIT_DOMAIN


def cmd_replay(args: argparse.Namespace) -> int:
    path = Path(args.manifest)
    try:
        manifest = json.loads(path.read_text())
        command = manifest["command"]
        config = dict(manifest["config"])
    except (OSError, ValueError, KeyError) as exc:
        raise InputError(f"{path}: not a readable manifest ({exc})") from exc
    if command not in COMMANDS or command == "replay":
        raise InputError(f"{path}: cannot replay command {command!r}")
    config["out_dir"] = args.out_dir
    config["command"] = command
    return COMMANDS[command](argparse.Namespace(**config))


COMMANDS = {
    "threshold": cmd_threshold,
    "optimize": cmd_optimize,
    "construct": cmd_construct,
    "girth": cmd_girth,
    "simulate": cmd_simulate,
    "verify-decay": cmd_verify_decay,
    "replay": cmd_replay,
}


# -- parser -----------------------------------------------------------------------


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="protoldpc", description="Protograph LDPC codes on the binary erasure channel."
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("-o", "--out-dir", default=".", help="directory for artifacts and manifest")

    def de_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--t-max", type=_positive_int, default=DEFAULT_T_MAX)
        p.add_argument("--delta", type=float, default=DEFAULT_DELTA)

    p = sub.add_parser("threshold", help="density-evolution threshold of a base matrix")
    p.add_argument("matrix", help="base-matrix text file")
    p.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
    de_flags(p)
    p.add_argument("--trace", action="store_true", help="also write trace.csv (t, xbar)")
    p.add_argument("--trace-epsilon", type=float, default=None,
                   help="channel parameter of the trace (default: lower bracket end)")
    common(p)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("optimize", help="differential evolution over base matrices")
    p.add_argument("--rows", type=_positive_int, required=True)
    p.add_argument("--cols", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--population", type=_positive_int, default=None, help="default 10*rows*cols")
    p.add_argument("--generations", type=int, default=6000)
    p.add_argument("--crossover", type=float, default=0.88)
    p.add_argument("--mutation-weight", type=float, default=0.5)
    p.add_argument("--entry-cap", type=_positive_int, default=6)
    p.add_argument("--tolerance", type=float, default=1e-3, help="bisection width during search")
    p.add_argument("--final-tolerance", type=float, default=1e-5)
    de_flags(p)
    p.add_argument("--parallelism", type=_positive_int, default=1)
    common(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("construct", help="lift a base matrix via node splitting")
    p.add_argument("matrix", help="base-matrix text file")
    p.add_argument("--source", choices=("lps", "random"), default="lps")
    p.add_argument("--lps", type=int, nargs=2, metavar=("P", "Q"), default=None,
                   help="LPS primes (default: smallest usable pair)")
    p.add_argument("--half-size", type=_positive_int, default=None,
                   help="vertices per side of the random source graph")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--attempts", type=_positive_int, default=100)
    p.add_argument("--girth-floor", type=int, default=4)
    p.add_argument("--alist-name", default="code.alist")
    common(p)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("girth", help="exact girth of an alist or edge-list graph")
    p.add_argument("graph", help=".alist file or edge-list text")
    common(p)
    p.set_defaults(func=cmd_girth)

    p = sub.add_parser("simulate", help="Monte Carlo peeling on an alist code")
    p.add_argument("alist")
    p.add_argument("--epsilon", type=_parse_eps_list, required=True, help="e.g. 0.40,0.44,0.48")
    p.add_argument("--trials", type=_positive_int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-peel-rounds", type=_positive_int, default=None)
    p.add_argument("--parallelism", type=_positive_int, default=1)
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify-decay", help="check the doubly exponential decay bound")
    p.add_argument("matrix")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--t-max", type=_positive_int, default=DEFAULT_T_MAX)
    p.add_argument("--trace", action="store_true")
    common(p)
    p.set_defaults(func=cmd_verify_decay)

    p = sub.add_parser("replay", help="rerun a command from its manifest")
    p.add_argument("manifest", help="manifest-<command>.json of an earlier run")
    common(p)
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
