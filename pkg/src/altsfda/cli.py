"""Command line entry point: ``altsfda {pretrain,adapt,analyze,ablate}``."""

import argparse
import json
import logging
import sys

from . import commands
from .config import PRESETS, AdaptConfig, apply_overrides


def build_parser():
    ap = argparse.ArgumentParser(prog="altsfda", description="Source-free adaptation on synthetic domain pairs.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; missing keys take defaults")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--preset", choices=sorted(PRESETS))
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config field (repeatable)")
        p.add_argument("-v", "--verbose", action="store_true")

    common(sub.add_parser("pretrain", help="train the source model"))
    p = sub.add_parser("adapt", help="adapt a source checkpoint to the target domain")
    common(p)
    p.add_argument("--checkpoint", help="source checkpoint; pretrains first when omitted")
    p = sub.add_parser("analyze", help="diagnostic reports for a checkpoint")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--tag")
    p.add_argument("--reference", choices=("label", "prediction"), default="label")
    p.add_argument("--agreement", choices=("all", "fraction"), default="all")
    p = sub.add_parser("ablate", help="preset grid over several seeds")
    common(p)
    p.add_argument("--seeds", type=int, default=5, help="number of seeds, counted from --seed")
    return ap


def resolve_config(args):
    if args.config:
        cfg = AdaptConfig.load(args.config)
    elif getattr(args, "checkpoint", None) and args.command == "analyze":
        cfg = commands.config_from_checkpoint(args.checkpoint)
    else:
        cfg = AdaptConfig()
    cfg = apply_overrides(cfg, args.overrides)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    if args.out:
        cfg = cfg.replace(out_dir=args.out)
    if args.preset:
        cfg = cfg.with_preset(args.preset)
    return cfg


def run(args):
    cfg = resolve_config(args)
    if args.command == "pretrain":
        r = commands.cmd_pretrain(cfg)
    elif args.command == "adapt":
        r = commands.cmd_adapt(cfg, args.checkpoint)
    elif args.command == "analyze":
        full = commands.cmd_analyze(cfg, args.checkpoint, args.tag, args.reference, args.agreement)
        r = {"tag": full["tag"], "accuracy": full["report"].accuracy,
             "regularizer": full["regularizer"], "bound_holds": full["bound"].holds}
    else:
        seeds = tuple(range(cfg.seed, cfg.seed + args.seeds))
        full = commands.cmd_ablate(cfg, seeds)
        r = {name: sum(v) / len(v) for name, v in full["accuracy"].items()}
    r["out_dir"] = cfg.out_dir
    return r


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        result = run(args)
    except Exception as e:  # one machine-parseable line, nonzero exit
        msg = json.dumps(str(e))
        print(f"error command={args.command} type={type(e).__name__} message={msg}", file=sys.stderr)
        return 1
    print(json.dumps(result, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
