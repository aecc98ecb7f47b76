"""Single command with subcommands for training, attacking, explaining,
detecting and reproducing the report tables.

Exit codes: 0 success, 1 invalid config, 2 missing prerequisite,
3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PREREQ = 2
EXIT_RUNTIME = 3


def _add_common(p):
    p.add_argument("--config", default=None, help="experiment config JSON")
    p.add_argument("--out", default=None, help="output root (overrides config/out_dir)")
    p.add_argument("--jobs", type=int, default=1, help="parallelism bound inside a stage")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uavguard", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a config and echo the normalized form")
    p.add_argument("--config", default=None)

    p = sub.add_parser("train", help="train one agent variant")
    _add_common(p)
    p.add_argument("--apf", choices=["on", "off"], required=True)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("attack", help="attack stages")
    p.add_argument("mode", choices=["sweep", "probe", "campaign"])
    _add_common(p)
    p.add_argument("--eps", type=float, default=None, help="override attack.eps")
    p.add_argument("--iters", type=int, default=None, help="override attack.iterations")

    p = sub.add_parser("shap", help="attribution over a logged episode")
    p.add_argument("mode", choices=["full", "gru"])
    _add_common(p)
    p.add_argument("--weights", required=True)
    p.add_argument("--obs", required=True, help="NDJSON episode log")
    p.add_argument("--background", required=True, help=".npz with image/pos reference arrays")

    p = sub.add_parser("detect", help="detector stages")
    p.add_argument("mode", choices=["build", "train", "eval", "bench"])
    _add_common(p)
    p.add_argument("--kind", choices=["fcn", "cnn", "lstm"], default=None)

    p = sub.add_parser("reproduce", help="run a named reproduction stage")
    _add_common(p)
    from .harness.stages import STAGES

    p.add_argument("--stage", choices=list(STAGES), required=True)
    p.add_argument("--force", action="store_true", help="retrain even if artifacts exist")

    return parser


def _load_config(args):
    from .harness.config import validate_config

    return validate_config(getattr(args, "config", None))


def _apply_overrides(doc, args):
    if getattr(args, "eps", None) is not None:
        doc["attack"]["eps"] = args.eps
    if getattr(args, "iters", None) is not None:
        doc["attack"]["iterations"] = args.iters
    if getattr(args, "seed", None) is not None:
        doc["seed"] = args.seed
    return doc


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(message)s")
    args = build_parser().parse_args(argv)
    from .harness.config import ConfigError

    try:
        doc = _apply_overrides(_load_config(args), args)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    from .harness.stages import MissingPrerequisite

    try:
        return _dispatch(args, doc)
    except MissingPrerequisite as exc:
        print(f"missing prerequisite: {exc}", file=sys.stderr)
        return EXIT_PREREQ
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        logging.getLogger("uavguard").exception("stage failed")
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def _dispatch(args, doc) -> int:
    from .harness.stages import reproduce

    if args.command == "validate":
        print(json.dumps(doc, indent=1))
        return EXIT_OK

    if args.command == "train":
        from .ddpg import train
        from .harness.config import Experiment
        from .harness.seeds import derive_seed

        exp = Experiment.from_config(doc, args.out)
        variant = f"apf_{args.apf}"
        out_dir = exp.out_dir / "train-compare" / variant
        train(
            exp.arena, exp.train, apf_enabled=args.apf == "on",
            seed=derive_seed(exp.seed, f"train/{variant}"), sim=exp.sim, out_dir=out_dir,
        )
        print(f"trained {variant}: {out_dir / 'actor.uavw'}")
        return EXIT_OK

    if args.command == "attack":
        stage = {"sweep": "attack-sweep", "probe": "deflection-probe",
                 "campaign": "campaign"}[args.mode]
        manifest = reproduce(stage, doc, args.out, jobs=args.jobs)
        print(f"wrote {manifest}")
        return EXIT_OK

    if args.command == "shap":
        return _run_shap(args, doc)

    if args.command == "detect":
        if args.mode == "bench":
            manifest = reproduce("latency", doc, args.out, jobs=args.jobs)
        else:
            manifest = reproduce("detector-suite", doc, args.out, jobs=args.jobs)
        print(f"wrote {manifest}")
        return EXIT_OK

    if args.command == "reproduce":
        manifest = reproduce(args.stage, doc, args.out, jobs=args.jobs,
                             force=getattr(args, "force", False))
        print(f"wrote {manifest}")
        return EXIT_OK

    raise ValueError(f"unhandled command {args.command}")


def _run_shap(args, doc) -> int:
    from .ddpg.nets import obs_to_feeds
    from .harness.config import Experiment
    from .harness.logs import observations_from_log, read_ndjson
    from .harness.stages import MissingPrerequisite
    from .nn import load_network
    from .xai import deep_attribution, gru_background, gru_layer_shap, make_background, \
        model_hash, split_actor, write_records

    exp = Experiment.from_config(doc, args.out)
    for path in (args.weights, args.obs, args.background):
        if not Path(path).exists():
            raise MissingPrerequisite(f"{path} does not exist")
    actor, _ = load_network(args.weights)
    rows = read_ndjson(args.obs)
    observations = observations_from_log(exp.arena, rows)
    bg_npz = np.load(args.background)
    refs = {"image": bg_npz["image"], "pos": bg_npz["pos"]}

    out_dir = exp.out_dir / "shap"
    out_dir.mkdir(parents=True, exist_ok=True)
    header = {"model_hash": model_hash(actor), "head": 1,
              "background_hash": __import__("uavguard.xai", fromlist=["array_hash"]).array_hash(
                  refs["image"])}
    if args.mode == "full":
        background = make_background(actor, refs)
        frames = [deep_attribution(actor, obs_to_feeds(o), background, 1) for o in observations]
        records = np.stack([f.values["image"][..., 0] for f in frames])
        path = write_records(out_dir / "full_attributions.uava", records, header)
    else:
        split = split_actor(actor)
        background = gru_background(split, refs)
        frames = [gru_layer_shap(split, obs_to_feeds(o), background) for o in observations]
        records = np.stack([f.values["gru_out"] for f in frames])
        path = write_records(out_dir / "gru_attributions.uava", records, header)
    print(f"wrote {path} ({len(records)} frames)")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
