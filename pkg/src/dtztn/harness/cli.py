"""Command-line entry point.

Exit status: 0 on success, 1 on usage or configuration errors, 2 on runtime
errors (I/O, missing artifacts, failed runs).
"""
import argparse
import json
import os
import sys

from ..agent import greedy_policy, read_qtable_csv, write_qtable_csv
from ..exceptions import ConfigError
from ..netsim import write_schedule_json
from ..predictor import save_bundle
from ..traffic import TrafficParams, generate_series, write_series_csv
from ..twin import ActionDatabase, DigitalTwin
from .config import SCENARIOS, ScenarioConfig, default_config_json, load_config, validate
from .report import emit_report
from .scenarios import build_twin, run_scenario, scenario_schedule, train_policy, train_predictor

log = print


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def _common(p):
    p.add_argument("--config", help="JSON config file (per-module sections)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", help="output directory (default from config: out)")


def build_parser():
    parser = _Parser(prog="dtztn", description="Digital-twin assisted zero-touch "
                     "bandwidth management simulator")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("generate", help="write Poisson traffic series and scenario schedules")
    _common(p)
    p.add_argument("--print-defaults", action="store_true",
                   help="print the full default config as JSON and exit")

    p = sub.add_parser("train", help="train the predictor and Q-agent, save artifacts")
    _common(p)

    p = sub.add_parser("run", help="run a closed-loop scenario")
    _common(p)
    p.add_argument("--scenario", required=True, choices=SCENARIOS)
    p.add_argument("--no-svg", action="store_true", help="skip the SVG chart")

    p = sub.add_parser("compare", help="compare the five throughput techniques")
    _common(p)
    p.add_argument("--no-svg", action="store_true", help="skip the SVG chart")

    p = sub.add_parser("what-if", help="simulate a hypothetical state and store its action")
    _common(p)
    p.add_argument("--state", type=float, required=True, help="state bandwidth in Kbps")

    p = sub.add_parser("inspect-db", help="print the action database")
    _common(p)
    return parser


def _config(args):
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    if args.out is not None:
        cfg = cfg.replace(out=args.out)
    return validate(cfg)


def _path(cfg, name):
    return os.path.join(cfg.out, name)


def _cmd_generate(cfg, args):
    if args.print_defaults:
        log(default_config_json())
        return
    os.makedirs(cfg.out, exist_ok=True)
    t = cfg.traffic
    for name, length, seed in (("train", t.train_length, cfg.seed),
                               ("test", t.test_length, cfg.seed + 1)):
        series = generate_series(TrafficParams(t.lam, t.unit_size, length, seed, t.hold))
        write_series_csv(_path(cfg, f"{name}_series.csv"), series)
    for name in SCENARIOS:
        write_schedule_json(_path(cfg, f"schedule_{name}.json"), scenario_schedule(cfg, name))
    log(f"wrote traffic series and schedules to {cfg.out}")


def _cmd_train(cfg, args):
    os.makedirs(cfg.out, exist_ok=True)
    bundle, metrics, losses = train_predictor(cfg)
    q, states, actions = train_policy(cfg)
    save_bundle(bundle, _path(cfg, "predictor.json"))
    write_qtable_csv(_path(cfg, "qtable.csv"), q, states, actions)
    twin = DigitalTwin(None, q, states, actions)
    twin.db.save(_path(cfg, "action_db.json"))
    log(f"final training MSE {losses[-1]:.6f}; test MAE {metrics['mae']:.2f} Kbps")
    log("policy: " + ", ".join(f"{s:g}->{a:g}" for s, a in greedy_policy(q, states, actions).items()))


def _cmd_run(cfg, args):
    report = run_scenario(cfg.replace(name=args.scenario))
    formats = ("csv", "text_table") if args.no_svg else ("csv", "svg_chart", "text_table")
    emit_report(report, cfg.out, formats)
    if hasattr(report, "twin"):
        report.twin.db.save(_path(cfg, "action_db.json"))
        save_bundle(report.twin.predictor, _path(cfg, "predictor.json"))


def _cmd_compare(cfg, args):
    report = run_scenario(cfg.replace(name="compare"))
    formats = ("csv", "text_table") if args.no_svg else ("csv", "svg_chart", "text_table")
    emit_report(report, cfg.out, formats)


def _load_policy(cfg):
    path = _path(cfg, "qtable.csv")
    if os.path.exists(path):
        return read_qtable_csv(path, cfg.agent.state_step)
    return train_policy(cfg)


def _cmd_what_if(cfg, args):
    if args.state <= 0:
        raise ConfigError("--state", "must be > 0")
    os.makedirs(cfg.out, exist_ok=True)
    q, states, actions = _load_policy(cfg)
    twin = build_twin(cfg, None, q, states, actions)
    db_path = _path(cfg, "action_db.json")
    if os.path.exists(db_path):
        twin.db.entries.update(ActionDatabase.load(db_path).entries)
    entry = twin.what_if(args.state)
    twin.db.save(db_path)
    write_qtable_csv(_path(cfg, "qtable.csv"), twin.q, twin.states, twin.actions)
    log(json.dumps({"state_kbps": args.state, "action_kbps": entry.action,
                    "origin": entry.origin, "occurrences": entry.occurrences}))


def _cmd_inspect_db(cfg, args):
    db = ActionDatabase.load(_path(cfg, "action_db.json"))
    log(f"{'state_kbps':>10} {'action_kbps':>12} {'origin':>9} {'occurrences':>12}")
    for item in db.to_dict()["entries"]:
        log(f"{item['state_kbps']:>10g} {item['action_kbps']:>12g} {item['origin']:>9} "
            f"{item['occurrences']:>12d}")


COMMANDS = {"generate": _cmd_generate, "train": _cmd_train, "run": _cmd_run,
            "compare": _cmd_compare, "what-if": _cmd_what_if, "inspect-db": _cmd_inspect_db}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return 0 if exc.code in (0, None) else 1
    try:
        cfg = _config(args)
        COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (OSError, RuntimeError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
