"""Command line entry point.

Subcommands: gen-data, train, infer, eval, oracle-check, ref-sensitivity.
Training options can come from a config file of ``key = value`` lines
(--config); explicit flags override file values. The LTGSR_THREADS
environment variable caps the compute worker count.
"""

import argparse
import csv
import json
import os
import sys

import torch

from .dataset import load_dataset, make_dataset, save_dataset
from .image_io import read_image, write_image
from .losses import LossWeights
from .metrics import evaluate_model, ref_sensitivity
from .model import ModelConfig
from .search import oracle_check
from .training import TrainConfig, Trainer, TrainSeeds


def _parse_size(text):
    if "x" in text:
        h, w = text.split("x", 1)
        return int(h), int(w)
    return int(text), int(text)


def _parse_ints(text):
    return tuple(int(v) for v in text.split(",") if v != "")


def read_config_file(path):
    """key = value lines; '#' starts a comment; keys use flag spelling."""
    values = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {line!r}")
            key, val = (part.strip() for part in line.split("=", 1))
            values[key.replace("-", "_")] = val
    return values


_TRAIN_KEYS = {
    "epochs": int, "batch": int, "crop": int, "msfp_blocks": int,
    "lambda_tg": float, "lambda_per": float, "lambda_adv": float,
    "gp_lambda": float, "critic_steps": int, "seed": int,
    "channels": _parse_ints, "checkpoint_every": int,
    "lr_ltg": float, "lr_encoder": float, "lr_rest": float,
    "decay_factor": float, "decay_every": int, "no_global_skip": bool,
}


def _merged_train_options(args):
    merged = {}
    if args.config:
        raw = read_config_file(args.config)
        for key, val in raw.items():
            if key not in _TRAIN_KEYS:
                raise ValueError(f"unknown config key {key!r}")
            conv = _TRAIN_KEYS[key]
            merged[key] = val.lower() in ("1", "true", "yes") if conv is bool else conv(val)
    for key in _TRAIN_KEYS:
        flag_val = getattr(args, key, None)
        if flag_val is not None and flag_val is not False:
            merged[key] = flag_val
    return merged


def cmd_gen_data(args):
    h, w = _parse_size(args.size)
    groups = make_dataset(args.n, args.seed, h, w)
    manifest = save_dataset(groups, args.out, seed=args.seed, png_previews=args.png)
    print(json.dumps({"out": args.out, "n": manifest["n"],
                      "height": manifest["height"], "width": manifest["width"]}))


def cmd_train(args):
    opts = _merged_train_options(args)
    seed = opts.pop("seed", 0)
    channels = opts.pop("channels", (64, 128, 256))
    msfp_blocks = opts.pop("msfp_blocks", 3)
    no_skip = opts.pop("no_global_skip", False)
    weights = LossWeights(
        lambda_per=opts.pop("lambda_per", 1e-2),
        lambda_tg=opts.pop("lambda_tg", 0.3),
        lambda_adv=opts.pop("lambda_adv", 1e-3),
        gp_lambda=opts.pop("gp_lambda", 10.0),
    )
    model_cfg = ModelConfig(channels=tuple(channels), msfp_blocks=msfp_blocks,
                            global_skip=not no_skip)
    cfg = TrainConfig(weights=weights,
                      seeds=TrainSeeds(data=seed, init=seed + 1, gan=seed + 2),
                      **opts)
    dataset = load_dataset(args.data)
    trainer = Trainer(model_cfg, cfg)
    trainer.fit(dataset, out_path=args.out, log_stream=sys.stdout)
    print(json.dumps({"checkpoint": args.out, "steps": trainer.global_step}))


def cmd_infer(args):
    trainer = Trainer.load(args.ckpt)
    img = read_image(args.input)
    sr = trainer.infer(img)
    write_image(args.output, sr)
    print(json.dumps({"out": args.output, "height": sr.shape[0], "width": sr.shape[1]}))


def cmd_eval(args):
    trainer = Trainer.load(args.ckpt)
    dataset = load_dataset(args.data)
    report = evaluate_model(trainer, dataset)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["index", "psnr", "ssim", "pdist"])
            writer.writeheader()
            writer.writerows(report.per_image)
    print(json.dumps(report.to_json_dict()))


def cmd_oracle_check(args):
    result = oracle_check(trials=args.trials)
    print(json.dumps(result))
    return 0 if result["pass"] else 1


def cmd_ref_sensitivity(args):
    trainer = Trainer.load(args.ckpt)
    dataset = load_dataset(args.data)
    seeds = [int(s) for s in args.seeds.split(",") if s != ""]
    print(json.dumps(ref_sensitivity(trainer, dataset, seeds)))


def build_parser():
    parser = argparse.ArgumentParser(prog="ltgsr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic phantom dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", default="96", help="side length or HxW")
    p.add_argument("--out", required=True)
    p.add_argument("--png", action="store_true", help="also write PNG previews")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train on a generated dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="key = value option file")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--crop", type=int)
    p.add_argument("--msfp-blocks", dest="msfp_blocks", type=int)
    p.add_argument("--lambda-tg", dest="lambda_tg", type=float)
    p.add_argument("--lambda-per", dest="lambda_per", type=float)
    p.add_argument("--lambda-adv", dest="lambda_adv", type=float)
    p.add_argument("--gp-lambda", dest="gp_lambda", type=float)
    p.add_argument("--critic-steps", dest="critic_steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--channels", type=_parse_ints, help="e.g. 16,32,64")
    p.add_argument("--checkpoint-every", dest="checkpoint_every", type=int)
    p.add_argument("--no-global-skip", dest="no_global_skip", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", help="reference-free inference on one image")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--csv", help="also write per-image rows as CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("oracle-check", help="search-vs-oracle equivalence suite")
    p.add_argument("--trials", type=int, default=32)
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("ref-sensitivity", help="reference-shuffle robustness study")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--seeds", default="1,2,3")
    p.set_defaults(func=cmd_ref_sensitivity)

    return parser


def main(argv=None):
    threads = os.environ.get("LTGSR_THREADS")
    if threads:
        torch.set_num_threads(max(1, int(threads)))
    args = build_parser().parse_args(argv)
    return args.func(args) or 0


if __name__ == "__main__":
    sys.exit(main())
