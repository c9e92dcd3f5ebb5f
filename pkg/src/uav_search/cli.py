"""Command-line entry points for compiling models and running experiments.

Verbs: compile-model, run, sweep, threshold-scan, dump-belief. Every command
is deterministic in (inputs, seed): re-running overwrites its outputs with
identical bytes, regardless of --jobs. Floats are written with repr() so the
CSVs round-trip exactly.

Exit codes: 0 success, 1 validation error (bad flags, config, file formats),
2 runtime error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

from .config import (
    ConfigError,
    ScenarioConfig,
    apply_axis,
    load_scenario,
    load_sweep,
    sweep_points,
)
from .belief import init_belief, propagate
from .movement import ModelFormatError, compile_model, save_model, traces_for_strategies
from .road_graph import GraphFormatError, load_graph, overlay_grid
from .simulator import BatchStats, TrialResult, build_world, run_batch, trial_seed
from .strategies import make_strategy

DEFAULT_TRIALS = 100
GRID_CSV = "threshold_grid.csv"
BEST_CSV = "threshold_best.csv"
SWEEP_CSV = "sweep.csv"

_VALIDATION_ERRORS = (
    ConfigError,
    GraphFormatError,
    ModelFormatError,
    FileNotFoundError,
    IsADirectoryError,
    NotADirectoryError,
)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; bad flags are validation here."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _fmt(value) -> str:
    """CSV cell: repr for floats keeps round-trip exactness."""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_text(path: str, text: str) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _parse_strategies(spec: str) -> list:
    """Comma list of `name` or `name:key=value[;key=value]` items."""
    strategies = []
    for item in filter(None, (s.strip() for s in spec.split(","))):
        name, _, rest = item.partition(":")
        params = {}
        for pair in filter(None, rest.split(";")):
            key, sep, value = pair.partition("=")
            if not sep:
                raise ConfigError(f"--strategies: expected key=value in {item!r}")
            try:
                params[key.strip()] = float(value)
            except ValueError:
                raise ConfigError(f"--strategies: bad number {value!r} in {item!r}") from None
        try:
            strategies.append(make_strategy(name.strip(), params or None))
        except (KeyError, ValueError) as exc:
            msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
            raise ConfigError(f"--strategies: {msg}") from None
    if not strategies:
        raise ConfigError("--strategies: need at least one strategy")
    return strategies


def _parse_range(spec: str) -> tuple[float, float]:
    lo, sep, hi = spec.partition(":")
    try:
        if not sep:
            raise ValueError
        pair = (float(lo), float(hi))
    except ValueError:
        raise ConfigError(f"--velocity: expected LO:HI km/h, got {spec!r}") from None
    if not (0 < pair[0] <= pair[1]):
        raise ConfigError(f"--velocity: need 0 < LO <= HI, got {spec!r}")
    return pair


def _parse_floats(spec: str, flag: str) -> list[float]:
    try:
        values = [float(s) for s in filter(None, (v.strip() for v in spec.split(",")))]
    except ValueError:
        raise ConfigError(f"{flag}: expected comma-separated numbers, got {spec!r}") from None
    if not values:
        raise ConfigError(f"{flag}: need at least one value")
    return values


def _print_stats(stats: BatchStats) -> None:
    mean = "n/a" if math.isnan(stats.mean_detection_tick) else f"{stats.mean_detection_tick:.2f}"
    print(
        f"success rate {stats.success_rate:.4f} ({stats.n_wins}/{stats.n_trials}), "
        f"95% CI [{stats.ci_low:.4f}, {stats.ci_high:.4f}], mean detection tick {mean}"
    )


def _trial_csv(results: list[TrialResult], n_targets: int) -> str:
    header = ["trial", "seed", "outcome", "ticks", "losing_target", "timeout"]
    header += [f"det_{j}" for j in range(n_targets)]
    lines = [",".join(header)]
    for i, r in enumerate(results):
        row = [
            str(i),
            str(r.seed),
            r.outcome,
            str(r.ticks),
            str(-1 if r.losing_target is None else r.losing_target),
            str(int(r.timeout)),
        ]
        row += [str(r.detection_ticks.get(j, -1)) for j in range(n_targets)]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def cmd_compile_model(args) -> int:
    graph = load_graph(args.graph)
    refined, _ = overlay_grid(graph, args.radius)
    strategies = _parse_strategies(args.strategies)
    traces = traces_for_strategies(
        refined, strategies, args.tick, _parse_range(args.velocity), args.runs_per_pair,
        args.seed if args.seed is not None else 0,
    )
    model = compile_model(traces, refined, args.smoothing, args.tick, args.target_class)
    parent = os.path.dirname(args.out)
    if parent:
        os.makedirs(parent, exist_ok=True)
    save_model(model, args.out)
    print(f"wrote {args.out}: {len(model.transitions)} rows from {len(traces)} traces")
    return 0


def _check_trials(n: int) -> None:
    if n < 1:
        raise ConfigError("--trials: need at least 1")


def cmd_run(args) -> int:
    _check_trials(args.trials)
    scenario = load_scenario(args.scenario)
    seed = args.seed if args.seed is not None else 0
    stats, results = run_batch(scenario, args.trials, seed, jobs=args.jobs)
    _print_stats(stats)
    if args.out:
        _write_text(args.out, _trial_csv(results, len(scenario.targets)))
        print(f"wrote {args.out}")
    return 0


def cmd_sweep(args) -> int:
    spec = load_sweep(args.sweep)
    seed = args.seed if args.seed is not None else spec.seed
    axis_names = [name for name, _ in spec.axes]
    lines = [",".join(axis_names + ["success_rate", "ci_low", "ci_high", "trials"])]
    for index, (assignment, scenario) in enumerate(sweep_points(spec)):
        stats, _ = run_batch(scenario, spec.trials, trial_seed(seed, index), jobs=args.jobs)
        values = [_fmt(v) for _, v in assignment]
        lines.append(",".join(values + [
            repr(stats.success_rate), repr(stats.ci_low), repr(stats.ci_high), str(stats.n_trials),
        ]))
        shown = " ".join(f"{n}={_fmt(v)}" for n, v in assignment)
        print(f"{shown} -> {stats.success_rate:.4f} [{stats.ci_low:.4f}, {stats.ci_high:.4f}]")
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, SWEEP_CSV)
    _write_text(path, "\n".join(lines) + "\n")
    print(f"wrote {path} ({len(lines) - 1} points x {spec.trials} trials)")
    return 0


def cmd_threshold_scan(args) -> int:
    _check_trials(args.trials)
    scenario = load_scenario(args.scenario)
    seed = args.seed if args.seed is not None else 0
    thresholds = _parse_floats(args.thresholds, "--thresholds")
    probs = _parse_floats(args.detect_probs, "--detect-probs") if args.detect_probs else [None]

    grid = [",".join(["detect_prob", "threshold", "success_rate", "ci_low", "ci_high", "trials"])]
    best = [",".join(["detect_prob", "best_threshold", "success_rate"])]
    index = 0
    for p in probs:
        based = scenario if p is None else apply_axis(scenario, "detect_prob", p)
        p_shown = based.team_min_detect_prob()
        top: tuple[float, float] | None = None  # (rate, threshold)
        for th in thresholds:
            point = apply_axis(based, "threshold", th)
            stats, _ = run_batch(point, args.trials, trial_seed(seed, index), jobs=args.jobs)
            index += 1
            grid.append(",".join([
                repr(p_shown), repr(th), repr(stats.success_rate),
                repr(stats.ci_low), repr(stats.ci_high), str(stats.n_trials),
            ]))
            print(f"p={p_shown:g} threshold={th:g} -> {stats.success_rate:.4f}")
            if top is None or stats.success_rate > top[0]:
                top = (stats.success_rate, th)
        assert top is not None
        best.append(",".join([repr(p_shown), repr(top[1]), repr(top[0])]))
        print(f"p={p_shown:g} best threshold {top[1]:g} at success rate {top[0]:.4f}")
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    for name, lines in ((GRID_CSV, grid), (BEST_CSV, best)):
        path = os.path.join(out_dir, name)
        _write_text(path, "\n".join(lines) + "\n")
        print(f"wrote {path}")
    return 0


def cmd_dump_belief(args) -> int:
    if args.ticks < 0:
        raise ConfigError("--ticks: must be >= 0")
    scenario = load_scenario(args.scenario)
    world = build_world(scenario)
    class_name = args.target_class or scenario.targets[0].class_name
    if class_name not in world.models:
        known = ", ".join(sorted(world.models))
        raise ConfigError(f"--target-class: {class_name!r} has no model; targets use: {known}")
    model = world.models[class_name]

    entry = args.entry if args.entry is not None else min(world.start_of_parent)
    if entry not in world.start_of_parent:
        raise ConfigError(f"--entry: edge {entry} is not an entry edge of the graph")

    belief = init_belief(world.refined, 0, world.start_of_parent[entry])
    lines = ["tick,edge,mass"]
    for tick in range(args.ticks + 1):
        for edge in belief.mass.nonzero()[0]:
            lines.append(f"{tick},{edge},{float(belief.mass[edge])!r}")
        if tick < args.ticks:
            belief = propagate(belief, model)
    text = "\n".join(lines) + "\n"
    if args.out:
        _write_text(args.out, text)
        print(f"wrote {args.out} ({len(lines) - 1} rows)")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (default 0; sweep: file seed)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for trials")
    common.add_argument("--out", default=None, help="output file, or directory for sweep/threshold-scan")

    parser = _Parser(prog="uav-search", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("compile-model", parents=[common], help="train a movement model from strategy routes")
    p.add_argument("graph", help="road graph file")
    p.add_argument("--strategies", required=True,
                   help="comma list, e.g. shortest,random_walk:beta=0.01,side_roads:penalty=1.5")
    p.add_argument("--radius", type=float, required=True, help="detection radius defining the grid (m)")
    p.add_argument("--tick", type=float, required=True, help="sampling tick (s)")
    p.add_argument("--velocity", default="8:12", help="target velocity range LO:HI (km/h)")
    p.add_argument("--runs-per-pair", type=int, default=3, help="traces per (entry, goal) pair")
    p.add_argument("--smoothing", type=float, default=0.01, help="Laplace smoothing epsilon")
    p.add_argument("--target-class", default="default", help="class name stored in the model file")
    p.set_defaults(func=cmd_compile_model)

    p = sub.add_parser("run", parents=[common], help="run one scenario batch")
    p.add_argument("scenario", help="scenario config file")
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", parents=[common], help="run every point of a parameter sweep")
    p.add_argument("sweep", help="sweep config file")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("threshold-scan", parents=[common],
                       help="find the best search threshold per detection probability")
    p.add_argument("scenario", help="scenario config file")
    p.add_argument("--thresholds", required=True, help="comma-separated threshold grid")
    p.add_argument("--detect-probs", default=None, help="comma-separated detection probabilities")
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    p.set_defaults(func=cmd_threshold_scan)

    p = sub.add_parser("dump-belief", parents=[common], help="propagate one belief and dump it per tick")
    p.add_argument("scenario", help="scenario config file")
    p.add_argument("--ticks", type=int, default=100, help="propagation steps to dump")
    p.add_argument("--entry", type=int, default=None, help="entry edge id (default: lowest)")
    p.add_argument("--target-class", default=None, help="class whose model to propagate")
    p.set_defaults(func=cmd_dump_belief)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
