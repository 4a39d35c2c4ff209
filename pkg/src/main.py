"""
qroute - command-line entry point

Subcommands:
    gen     generate a benchmark circuit
    route   route a circuit onto a topology
    verify  check a routed circuit against its circuit and topology
    train   train the transformer actor-critic with MCTS targets
    bench   compare routers on benchmark suites
"""
import argparse
import json
import math
import sys
from pathlib import Path
from typing import List, Optional

# Add src to path
sys.path.insert(0, str(Path(__file__).parent))
from utils.config import load_settings
from utils.errors import QRouteError, VerificationError
from utils.logger import get_logger

from routing.baselines import ORACLE_STATE_LIMIT, SABRE_DECAY, SABRE_LOOKAHEAD_WEIGHT, STOCHASTIC_TRIALS
from routing.circuit import BENCHMARK_KINDS, generate_benchmark, load_circuit, serialize_circuit
from routing.env import parse_routed, serialize_routed, verify
from routing.mcts import DEFAULT_ROLLOUTS
from routing.topology import load_topology
from routing.trainer import TrainConfig, train
from services import BenchService, RouterService

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_VERIFY = 3

DEFAULT_SIZES = "20,30,40,50,60,70,80,90,100,110,120"


def _write_output(text: str, out: Optional[str]):
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
        logger.info(f"Wrote {out}")
    else:
        sys.stdout.write(text + "\n")


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _name_list(text: str) -> List[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qroute", description="Qubit routing with MCTS and a transformer agent")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a benchmark circuit")
    gen.add_argument("--kind", required=True, choices=BENCHMARK_KINDS)
    gen.add_argument("--qubits", type=int, required=True)
    gen.add_argument("--seed", type=int)
    gen.add_argument("--layers", type=int, default=1, help="QAOA layers (regular, erdos)")
    gen.add_argument("--p", type=float, default=0.5, help="edge probability (erdos)")
    gen.add_argument("--hidden", help="hidden bit string (bv)")
    gen.add_argument("--gates", type=int, default=10, help="gate count (random)")
    gen.add_argument("--out")

    route = sub.add_parser("route", help="route a circuit")
    route.add_argument("--circuit", required=True)
    route.add_argument("--topology", required=True, help="topology JSON file or preset name")
    route.add_argument("--router", default="sabre", choices=RouterService.METHODS)
    route.add_argument("--mapping", default="trivial", choices=RouterService.MAPPINGS)
    route.add_argument("--checkpoint")
    route.add_argument("--rollouts", type=int, default=DEFAULT_ROLLOUTS)
    route.add_argument("--exploration", type=float, default=math.sqrt(2))
    route.add_argument("--seed", type=int)
    route.add_argument("--trials", type=int, default=STOCHASTIC_TRIALS)
    route.add_argument("--lookahead-weight", type=float, default=SABRE_LOOKAHEAD_WEIGHT)
    route.add_argument("--decay", type=float, default=SABRE_DECAY)
    route.add_argument("--oracle-limit", type=int, default=ORACLE_STATE_LIMIT)
    route.add_argument("--verify", action="store_true")
    route.add_argument("--out")

    check = sub.add_parser("verify", help="verify a routed circuit")
    check.add_argument("--circuit", required=True)
    check.add_argument("--topology", required=True)
    check.add_argument("--routed", required=True)

    tr = sub.add_parser("train", help="train the actor-critic")
    defaults = TrainConfig()
    tr.add_argument("--topology", default=defaults.topology)
    tr.add_argument("--benchmark", default=defaults.benchmark, choices=BENCHMARK_KINDS)
    tr.add_argument("--gates", type=int, default=defaults.benchmark_params["gates"])
    tr.add_argument("--circuits", type=int, default=defaults.circuit_count)
    tr.add_argument("--mapping", default=defaults.mapping, choices=("trivial", "random"))
    tr.add_argument("--episodes", type=int, default=defaults.episodes)
    tr.add_argument("--rollouts", type=int, default=defaults.rollouts)
    tr.add_argument("--batch-size", type=int, default=defaults.batch_size)
    tr.add_argument("--threshold", type=int, default=defaults.threshold)
    tr.add_argument("--capacity", type=int, default=defaults.capacity)
    tr.add_argument("--alpha", type=float, default=defaults.alpha)
    tr.add_argument("--auto-alpha", action="store_true")
    tr.add_argument("--lr", type=float, default=defaults.learning_rate)
    tr.add_argument("--decay", type=float, default=defaults.decay)
    tr.add_argument("--lookahead", type=int, default=defaults.lookahead)
    tr.add_argument("--no-replenish", action="store_true")
    tr.add_argument("--workers", type=int)
    tr.add_argument("--seed", type=int)
    tr.add_argument("--out", required=True, help="checkpoint path")
    tr.add_argument("--log", help="JSON-lines training log path")

    bench = sub.add_parser("bench", help="benchmark routers")
    bench.add_argument("--suite", default="all", help="'all' or comma-separated benchmark kinds")
    bench.add_argument("--topology", required=True)
    bench.add_argument("--routers", type=_name_list, default=["basic", "stochastic", "sabre"])
    bench.add_argument("--mapping", default="trivial", choices=RouterService.MAPPINGS)
    bench.add_argument("--seeds", type=int, default=10)
    bench.add_argument("--seed", type=int)
    bench.add_argument("--gates", type=int, default=50, help="gate count of random circuits")
    bench.add_argument("--checkpoint")
    bench.add_argument("--rollouts", type=int, default=DEFAULT_ROLLOUTS)
    bench.add_argument("--timing", action="store_true", help="record wall-clock time per cell")
    bench.add_argument("--workers", type=int)
    bench.add_argument("--out", help="report JSON path (default stdout)")
    bench.add_argument("--csv", help="report CSV path")
    bench.add_argument("--plot-data", help="write swaps-vs-gates scaling series to this path")
    bench.add_argument("--sizes", type=_int_list, default=_int_list(DEFAULT_SIZES))
    return parser


def cmd_gen(args, settings) -> int:
    params = {"layers": args.layers, "p": args.p, "gates": args.gates}
    if args.hidden is not None:
        params["hidden"] = args.hidden
    circuit = generate_benchmark(args.kind, args.qubits, seed=settings.seed if args.seed is None else args.seed,
                                 **params)
    _write_output(serialize_circuit(circuit), args.out)
    return EXIT_OK


def cmd_route(args, settings) -> int:
    circuit = load_circuit(args.circuit)
    topology = load_topology(args.topology)
    service = RouterService(
        topology, args.router,
        seed=settings.seed if args.seed is None else args.seed,
        checkpoint=args.checkpoint,
        trials=args.trials, lookahead_weight=args.lookahead_weight, decay=args.decay,
        rollouts=args.rollouts, exploration=args.exploration, oracle_limit=args.oracle_limit,
    )
    routed = service.route(circuit, args.mapping, verify_output=args.verify)
    _write_output(serialize_routed(routed), args.out)
    return EXIT_OK


def cmd_verify(args, settings) -> int:
    circuit = load_circuit(args.circuit)
    topology = load_topology(args.topology)
    routed = parse_routed(Path(args.routed).read_text(encoding="utf-8"))
    report = verify(routed, circuit, topology)
    if not report.ok:
        print(f"INVALID: {report.summary()}", file=sys.stderr)
        return EXIT_VERIFY
    print(f"OK: {routed.swap_count} swaps, {len(circuit)} gates")
    return EXIT_OK


def cmd_train(args, settings) -> int:
    config = TrainConfig(
        circuit_count=args.circuits,
        benchmark=args.benchmark,
        benchmark_params={"gates": args.gates},
        topology=args.topology,
        mapping=args.mapping,
        episodes=args.episodes,
        rollouts=args.rollouts,
        batch_size=args.batch_size,
        threshold=args.threshold,
        capacity=args.capacity,
        alpha=args.alpha,
        auto_alpha=args.auto_alpha,
        learning_rate=args.lr,
        decay=args.decay,
        seed=settings.seed if args.seed is None else args.seed,
        replenish=not args.no_replenish,
        workers=settings.workers if args.workers is None else args.workers,
        lookahead=args.lookahead,
    )
    result = train(config, checkpoint_path=args.out, log_path=args.log)
    print(f"Trained {config.episodes} episodes, {result.updates} updates -> {args.out}")
    return EXIT_OK


def cmd_bench(args, settings) -> int:
    topology = load_topology(args.topology)
    suite = list(BENCHMARK_KINDS) if args.suite == "all" else _name_list(args.suite)
    options = {"rollouts": args.rollouts}
    if args.checkpoint:
        options["checkpoint"] = args.checkpoint
    service = BenchService(
        topology, args.routers, mapping=args.mapping,
        seed=settings.seed if args.seed is None else args.seed,
        workers=settings.workers if args.workers is None else args.workers,
        timing=args.timing, router_options=options,
    )
    report = service.run(suite, args.seeds, {"gates": args.gates})
    _write_output(report.to_json(), args.out)
    if args.csv:
        report.write_csv(args.csv)
    if args.plot_data:
        series = service.scaling_series(args.sizes, args.seeds)
        Path(args.plot_data).write_text(json.dumps(series, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return EXIT_OK


COMMANDS = {
    "gen": cmd_gen,
    "route": cmd_route,
    "verify": cmd_verify,
    "train": cmd_train,
    "bench": cmd_bench,
}


def cli_dispatch(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments and run one subcommand

    Args:
        argv: Arguments without the program name (defaults to sys.argv[1:])

    Returns:
        Exit status: 0 ok, 1 domain or I/O error, 2 usage error, 3 verification failure
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    try:
        settings = load_settings()
        return COMMANDS[args.command](args, settings)
    except VerificationError as e:
        logger.error(f"{args.command} failed verification: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VERIFY
    except (QRouteError, OSError, json.JSONDecodeError) as e:
        logger.error(f"{args.command} failed: {e}", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


def main():
    """Main application entry point"""
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    main()
