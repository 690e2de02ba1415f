"""Command-line interface: synth, pretrain, eval, gradcheck.

Exit codes: 0 success, 1 usage/config error, 2 runtime failure.
"""

import argparse
import json
import os
import sys

import numpy as np

from sampfsl.config import ConfigError, RunConfig, load_config
from sampfsl.data import gen_synthetic, load_dataset, save_dataset
from sampfsl.encoder import encode, mlp_encoder
from sampfsl.episodes import evaluate
from sampfsl.graph import build_graph
from sampfsl.numcore import (
    Rng,
    ShapeError,
    grad_check,
    load_checkpoint,
    rows,
    save_checkpoint,
    vstack,
)
from sampfsl.pretrain import (
    AugmentationSpec,
    PretrainConfig,
    augment,
    pretrain_run,
    proto_contrastive_loss,
)
from sampfsl.samp import SampParams, samp_forward

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class _Parser(argparse.ArgumentParser):
    """argparse flavor whose usage errors exit with code 1 instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _model_from_config(cfg: RunConfig, rng: Rng):
    shape = cfg.model_shape()
    enc = mlp_encoder(cfg.input_dim, shape.hidden_dims, shape.embed_dim, rng)
    samp = SampParams(shape.embed_dim, shape.samp_steps, shape.samp_heads, rng)
    return enc, samp


def _all_params(enc, samp) -> dict:
    return {**enc.parameters(), **samp.parameters()}


def _write_checkpoint(directory, enc, samp) -> None:
    save_checkpoint(directory, {k: p.data for k, p in _all_params(enc, samp).items()})


def _load_into_model(directory, enc, samp) -> None:
    stored = load_checkpoint(directory)
    params = _all_params(enc, samp)
    missing = sorted(set(params) - set(stored))
    extra = sorted(set(stored) - set(params))
    if missing or extra:
        raise ShapeError(
            f"checkpoint does not match model (missing: {missing}, unexpected: {extra})"
        )
    for name, p in params.items():
        if stored[name].shape != p.data.shape:
            raise ShapeError(
                f"checkpoint entry {name} has shape {stored[name].shape}, "
                f"model expects {p.data.shape}"
            )
        p.data = stored[name]


def _resolve_checkpoint_dir(path) -> str:
    if os.path.isfile(os.path.join(path, "manifest.txt")):
        return path
    final = os.path.join(path, "final")
    if os.path.isfile(os.path.join(final, "manifest.txt")):
        return final
    raise FileNotFoundError(f"no checkpoint manifest under {path}")


def cmd_synth(args) -> int:
    shift = None
    if args.shift:
        try:
            parts = [float(tok) for tok in args.shift.split(",")]
        except ValueError:
            print(f"error: --shift is not numeric: {args.shift!r}", file=sys.stderr)
            return EXIT_USAGE
        shift = np.full(args.dim, parts[0]) if len(parts) == 1 else np.asarray(parts)
        if shift.size != args.dim:
            print(f"error: --shift needs 1 or {args.dim} values", file=sys.stderr)
            return EXIT_USAGE
    ds = gen_synthetic(args.classes, args.per_class, args.dim, args.sigma,
                       shift=shift, seed=args.seed)
    save_dataset(ds, args.out)
    print(f"wrote {ds.n_classes} classes x {ds.matrices[0].shape[0]} samples "
          f"(dim {ds.input_dim}) to {args.out}")
    return EXIT_OK


def cmd_pretrain(args) -> int:
    cfg = load_config(args.config)
    dataset = load_dataset(cfg.dataset)
    if dataset.input_dim != cfg.input_dim:
        raise ShapeError(
            f"dataset input_dim {dataset.input_dim} != configured input_dim {cfg.input_dim}"
        )

    def on_epoch(epoch, enc, samp):
        if cfg.checkpoint_every > 0 and (epoch + 1) % cfg.checkpoint_every == 0:
            _write_checkpoint(os.path.join(cfg.checkpoint, f"epoch_{epoch + 1:04d}"), enc, samp)

    enc, samp, history = pretrain_run(
        dataset.pooled(),
        cfg.pretrain_config(),
        spec=cfg.augmentation_spec(),
        shape=cfg.model_shape(),
        on_epoch=on_epoch,
    )
    _write_checkpoint(os.path.join(cfg.checkpoint, "final"), enc, samp)
    with open(cfg.history, "w") as f:
        for record in history:
            f.write(json.dumps(record) + "\n")
    csv_path = cfg.plot_csv or os.path.splitext(cfg.history)[0] + ".csv"
    with open(csv_path, "w") as f:
        f.write("epoch,loss\n")
        for epoch in range(cfg.epochs):
            losses = [h["L"] for h in history if h["epoch"] == epoch]
            if losses:
                f.write(f"{epoch},{sum(losses) / len(losses)!r}\n")
    if history:
        print(f"pretrained {cfg.epochs} epochs, final loss {history[-1]['L']:.6f}")
    else:
        print("pretrained 0 epochs")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = load_config(args.config)
    if args.no_ot:
        cfg.ot_enabled = False
    if args.episodes is not None:
        cfg.episodes = args.episodes
    ckpt_dir = _resolve_checkpoint_dir(args.checkpoint)
    enc, samp = _model_from_config(cfg, Rng(cfg.seed))
    _load_into_model(ckpt_dir, enc, samp)
    dataset = load_dataset(cfg.dataset)
    if dataset.input_dim != cfg.input_dim:
        raise ShapeError(
            f"dataset input_dim {dataset.input_dim} != configured input_dim {cfg.input_dim}"
        )
    report = evaluate(enc, samp, dataset, cfg.protocol(), cfg.seed,
                      gamma=cfg.gamma, sinkhorn_cfg=cfg.sinkhorn_config(),
                      plan_dump_dir=args.dump_plans)
    with open(cfg.report, "w") as f:
        f.write(report.to_json())
    if cfg.episode_log:
        with open(cfg.episode_log, "w") as f:
            for e, acc in enumerate(report.accuracies):
                f.write(json.dumps({"episode": e, "accuracy": acc}) + "\n")
    print(f"accuracy: {report.mean:.4f} +- {report.ci_half_width:.4f} "
          f"({cfg.episodes} episodes, ot_enabled={cfg.ot_enabled})")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    rng = Rng(args.seed)
    enc = mlp_encoder(5, (6,), 8, rng)
    samp = SampParams(8, 1, 2, rng)
    cfg = PretrainConfig(sources=2, augments=2, beta=0.7, epochs=1, seed=args.seed)
    batch = rng.normal((cfg.sources, 5))
    # augmentations do not depend on the parameters, so fix them up front
    xbar = augment(AugmentationSpec(), batch, cfg.augments, rng)
    params = _all_params(enc, samp)

    def loss():
        z = encode(enc, batch)
        zbar = encode(enc, xbar)
        v = vstack(z, zbar)
        g = build_graph(v.data, cfg.gamma)
        refined = samp_forward(samp, g, v)
        l1 = proto_contrastive_loss(zbar, z)
        l2 = proto_contrastive_loss(rows(refined, cfg.sources, v.data.shape[0]),
                                    rows(refined, 0, cfg.sources))
        return l1 * cfg.beta + l2

    err = grad_check(loss, params, h=args.step_size)
    status = "OK" if err <= args.threshold else "FAIL"
    print(f"gradcheck max relative error: {err:.3e} (threshold {args.threshold:g}) {status}")
    return EXIT_OK if err <= args.threshold else EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sampfsl", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--per-class", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shift", type=str, default="",
                   help="query-shift vector: one value (replicated) or dim comma-separated values")
    p.add_argument("--out", type=str, required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("pretrain", help="run contrastive pre-training from a config file")
    p.add_argument("--config", type=str, required=True)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("eval", help="episodic evaluation of a checkpoint")
    p.add_argument("--config", type=str, required=True)
    p.add_argument("--checkpoint", type=str, required=True)
    p.add_argument("--no-ot", action="store_true", help="disable optimal-transport alignment")
    p.add_argument("--episodes", type=int, default=None)
    p.add_argument("--dump-plans", type=str, default=None,
                   help="directory for per-episode transport plans (debug)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference check of the full training step")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--step-size", type=float, default=1e-5)
    p.add_argument("--threshold", type=float, default=1e-5)
    p.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # runtime failures map to exit 2
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
