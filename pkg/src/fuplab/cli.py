"""``fuplab`` command line.

Every experiment subcommand builds one config from ``--config`` (a JSON
file) plus ``-p key=value`` overrides, runs it and prints the record::

    fuplab exponent -p delta=0.5 -p cr=1 -p K=1
    fuplab --out runs scaling -p M=3 -p alphabet=[0,2] -p k_max=7
    fuplab sweep --config sweep.json --parallelism 4
    fuplab emit --selector scaling

Exit codes: 0 success, 2 invalid input, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .harness import PLOT_COLUMNS, ValidationError, emit_plotdata, run, sweep

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED = 0, 2, 3

EXPERIMENTS = {
    "cantor": "cantor", "regularity": "regularity", "fup-norm": "fup_norm", "ucp": "ucp",
    "scaling": "scaling", "baker": "baker", "exponent": "exponent", "multiplier": "multiplier",
    "hilbert-check": "hilbert_check", "fio": "fio",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)


def _globals(defaults: bool) -> argparse.ArgumentParser:
    # Shared by the top level and every subcommand so flags work on either side.
    d = None if not defaults else argparse.SUPPRESS
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", default=d, help="JSON config file (a list of configs for sweep)")
    p.add_argument("--out", default=d, help="result directory (default: results)")
    p.add_argument("--parallelism", type=int, default=d, help="worker processes for sweep (default 1)")
    p.add_argument("--seed", type=int, default=d, help="seed for every random start vector")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fuplab", description="Fractal uncertainty experiments", parents=[_globals(False)])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, kind in EXPERIMENTS.items():
        sp = sub.add_parser(name, parents=[_globals(True)], help=f"run one {kind} experiment")
        sp.add_argument("-p", "--param", action="append", default=[], metavar="KEY=VALUE",
                        help="parameter override; VALUE is parsed as JSON when possible")
    sub.add_parser("sweep", parents=[_globals(True)], help="run a list of configs from --config")
    sp = sub.add_parser("emit", parents=[_globals(True)], help="write tidy plot CSV from the result store")
    sp.add_argument("--selector", required=True, help=f"record kind: {', '.join(sorted(PLOT_COLUMNS))}")
    sp.add_argument("--output", help="CSV path (default: <out>/plot_<selector>.csv)")
    return parser


def _value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _load(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc


def _experiment_config(args, kind: str) -> dict:
    cfg = _load(args.config) if args.config else {}
    if not isinstance(cfg, dict):
        raise ValidationError("config file must hold a single JSON object")
    if cfg.get("kind", kind) != kind:
        raise ValidationError(f"config kind {cfg['kind']!r} does not match subcommand")
    cfg = {**cfg, "kind": kind, "params": dict(cfg.get("params", {}))}
    for item in args.param:
        key, sep, val = item.partition("=")
        if not sep or not key:
            raise ValidationError(f"parameter override {item!r} is not KEY=VALUE")
        cfg["params"][key] = _value(val)
    if args.seed is not None:
        cfg["seed"] = args.seed
    return cfg


def _print(obj):
    print(json.dumps(obj, sort_keys=True, indent=2))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = args.out or "results"
    try:
        if args.command in EXPERIMENTS:
            rec = run(_experiment_config(args, EXPERIMENTS[args.command]), out_dir=out)
            _print(rec.to_json())
            return EXIT_NONCONVERGED if rec.status == "nonconverged" else EXIT_OK
        if args.command == "sweep":
            if not args.config:
                raise ValidationError("sweep needs --config")
            data = _load(args.config)
            configs = data.get("configs") if isinstance(data, dict) else data
            if not isinstance(configs, list):
                raise ValidationError("sweep config must be a list or {\"configs\": [...]}")
            if args.seed is not None:
                configs = [{**c, "seed": args.seed} if isinstance(c, dict) else c for c in configs]
            recs = sweep(configs, parallelism=args.parallelism or 1, out_dir=out)
            for r in recs:
                print(json.dumps({"config_hash": r.config_hash, "kind": r.kind, "status": r.status,
                                  "error": r.error}, sort_keys=True))
            statuses = {r.status for r in recs}
            if statuses & {"invalid", "error"}:
                return EXIT_INVALID
            return EXIT_NONCONVERGED if "nonconverged" in statuses else EXIT_OK
        path = args.output or os.path.join(out, f"plot_{args.selector}.csv")
        if args.selector not in PLOT_COLUMNS:
            raise ValidationError(f"unknown selector {args.selector!r}")
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        emit_plotdata(out, args.selector, path)
        print(path)
        return EXIT_OK
    except ValidationError as exc:
        print(f"fuplab: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
