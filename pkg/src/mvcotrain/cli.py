"""Command-line interface: train, export-latent, eval, synth.

A single JSON config file drives training and evaluation; flags cover only
paths and mode toggles.  Recognized config keys:

- ``dataset``: path to a dataset directory, or ``synth``: an inline
  generator spec (``views``, ``classes``, ``samples_per_class``,
  ``latent_dim``, ``noise_std``, ``view_dims``, ``seed``) - exactly one of
  the two must be present
- ``encoder_dims`` (required), ``joint_dim``, ``head_dims``
- ``epochs``, ``r1``, ``r2``, ``lr_ae``, ``lr_sup``, ``patience``,
  ``batch_size`` (integer or ``"full"``), ``rho``, ``eps``, ``seed``
- ``split_ratio`` (default 0.5), ``scale`` (min-max scale features, fit on
  the training half), ``out_dir``

Unknown keys are rejected.  Set ``MVCOTRAIN_LOG=INFO`` (or ``DEBUG``) for
progress logging; every failure exits nonzero with a single
``mvcotrain: error: ...`` line on stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys

import numpy as np

from .cotrain import SnapshotBank, TrainConfig, run_cotraining, write_traces_csv
from .data import (
    MinMaxScale,
    SynthSpec,
    load_dataset,
    save_dataset,
    split,
    synth_multiview,
)
from .evaluation import evaluate_protocol
from .exceptions import DataError
from .networks import (
    ArchSpec,
    encode_views,
    joint_latent,
    load_checkpoint,
    save_checkpoint,
)

log = logging.getLogger("mvcotrain")

CONFIG_KEYS = {
    "dataset",
    "synth",
    "encoder_dims",
    "joint_dim",
    "head_dims",
    "epochs",
    "r1",
    "r2",
    "lr_ae",
    "lr_sup",
    "patience",
    "batch_size",
    "rho",
    "eps",
    "seed",
    "split_ratio",
    "scale",
    "out_dir",
}
SYNTH_KEYS = {
    "views",
    "classes",
    "samples_per_class",
    "latent_dim",
    "noise_std",
    "view_dims",
    "seed",
}


def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        raise DataError(str(err.strerror or err), path) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise DataError(err.msg, path, err.lineno) from None
    if not isinstance(doc, dict):
        raise DataError("config must be a JSON object", path)
    return doc


def load_config(path):
    doc = _load_json(path)
    unknown = sorted(set(doc) - CONFIG_KEYS)
    if unknown:
        raise DataError(f"unknown config keys: {unknown}", path)
    if ("dataset" in doc) == ("synth" in doc):
        raise DataError("config needs exactly one of 'dataset' or 'synth'", path)
    if "encoder_dims" not in doc:
        raise DataError("config is missing 'encoder_dims'", path)
    if "synth" in doc:
        _check_synth_doc(doc["synth"], path)
    return doc


def _check_synth_doc(sdoc, path):
    if not isinstance(sdoc, dict):
        raise DataError("'synth' must be a JSON object", path)
    unknown = sorted(set(sdoc) - SYNTH_KEYS)
    if unknown:
        raise DataError(f"unknown synth keys: {unknown}", path)


def _synth_from_doc(sdoc):
    seed = sdoc.get("seed", 0)
    spec = SynthSpec(**{k: v for k, v in sdoc.items() if k != "seed"})
    return spec, seed


def _dataset_from_config(doc, header=False, strict=False):
    if "dataset" in doc:
        return load_dataset(doc["dataset"], header=header, strict=strict)
    spec, seed = _synth_from_doc(doc["synth"])
    return synth_multiview(spec, seed)


def _train_config_from_doc(doc, view_dims, n_classes):
    joint = doc.get("joint_dim")
    encoder_dims = tuple(doc["encoder_dims"])
    if joint is None:
        joint = encoder_dims[-1]
    head = doc.get("head_dims")
    if head is None:
        head = (8 * joint, 4 * joint)
    arch = ArchSpec(
        view_input_dims=tuple(view_dims),
        encoder_dims=encoder_dims,
        supervised_dims=(*head, n_classes),
        joint_dim=joint,
    )
    batch = doc.get("batch_size", "full")
    if batch == "full":
        batch = None
    elif not isinstance(batch, int):
        raise ValueError(f"batch_size must be an integer or \"full\", got {batch!r}")
    return TrainConfig(
        arch=arch,
        epochs=doc.get("epochs", 5),
        r1=doc.get("r1", 1000),
        r2=doc.get("r2", 1000),
        lr_ae=doc.get("lr_ae", 0.5),
        lr_sup=doc.get("lr_sup", 0.9),
        patience=doc.get("patience", 200),
        batch_size=batch,
        rho=doc.get("rho", 0.95),
        eps=doc.get("eps", 1e-6),
        seed=doc.get("seed", 0),
    )


def _config_hash(doc):
    return hashlib.sha256(
        json.dumps(doc, sort_keys=True).encode("utf-8")
    ).hexdigest()


def _scale_meta(scaler):
    if scaler is None:
        return None
    return {
        "mins": [m.tolist() for m in scaler.mins],
        "ranges": [r.tolist() for r in scaler.ranges],
    }


def _scaler_from_meta(meta):
    entry = (meta or {}).get("scale")
    if not entry:
        return None
    return MinMaxScale(
        [np.asarray(m, dtype=np.float64) for m in entry["mins"]],
        [np.asarray(r, dtype=np.float64) for r in entry["ranges"]],
    )


def _write_feature_csv(path, x):
    with open(path, "w", encoding="utf-8") as fh:
        for row in x:
            fh.write(",".join(repr(float(c)) for c in row) + "\n")


def cmd_train(config_path, out_dir=None, header=False, strict=False):
    """Train on the training half of the split and write run artifacts."""
    doc = load_config(config_path)
    out = out_dir or doc.get("out_dir")
    if not out:
        raise DataError("no output directory: set 'out_dir' or pass --out", config_path)
    dataset = _dataset_from_config(doc, header=header, strict=strict)
    cfg = _train_config_from_doc(doc, dataset.view_dims, dataset.n_classes)
    ratio = doc.get("split_ratio", 0.5)
    train_ds, _ = split(dataset, ratio, cfg.seed)
    scaler = None
    if doc.get("scale", False):
        scaler = MinMaxScale.fit(train_ds.views)
        train_ds = type(train_ds)(
            scaler.apply(train_ds.views), train_ds.labels, train_ds.n_classes, scaler
        )

    os.makedirs(out, exist_ok=True)
    digest = _config_hash(doc)
    meta = {
        "config_sha256": digest,
        "split_ratio": ratio,
        "scale": _scale_meta(scaler),
    }

    def checkpoint_epoch(epoch, bank):
        log.info("epoch %d complete", epoch)
        save_checkpoint(
            os.path.join(out, f"checkpoint_epoch_{epoch}.npz"),
            bank.encoders,
            bank.decoders,
            bank.supervised,
            cfg.arch,
            cfg.seed,
            meta={**meta, "epoch": epoch},
        )

    result = run_cotraining(train_ds, cfg, on_epoch_end=checkpoint_epoch)
    save_checkpoint(
        os.path.join(out, "checkpoint.npz"),
        result.bank.encoders,
        result.bank.decoders,
        result.bank.supervised,
        cfg.arch,
        cfg.seed,
        meta={**meta, "epoch": cfg.epochs},
    )
    write_traces_csv(os.path.join(out, "losses.csv"), result.stages)
    manifest = {
        "seed": cfg.seed,
        "config_sha256": digest,
        "config": doc,
        "split_ratio": ratio,
        "train_rows": train_ds.n_samples,
        "init_fingerprints": result.init_fp,
        "final_fingerprints": result.bank.fingerprints(),
        "stages": [
            {
                "epoch": s.epoch,
                "stage": s.stage,
                "view": s.view,
                "rounds": s.trace.rounds,
                "best_round": s.best_round,
                "best_loss": s.best_loss,
                "stopped_early": s.stopped_early,
            }
            for s in result.stages
        ],
    }
    with open(os.path.join(out, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    print(out)
    return 0


def cmd_export_latent(checkpoint_path, dataset_dir, out_dir, header=False, strict=False):
    """Write per-view latents ``h_v.csv`` and the joint latent ``z.csv``."""
    ckpt = load_checkpoint(checkpoint_path)
    dataset = load_dataset(dataset_dir, header=header, strict=strict)
    views = dataset.views
    scaler = _scaler_from_meta(ckpt.meta)
    if scaler is not None:
        views = scaler.apply(views)
    expected = ckpt.arch.view_input_dims
    if dataset.view_dims != expected:
        bad = [
            f"view {v}: data has {got} features, checkpoint expects {want}"
            for v, (got, want) in enumerate(zip(dataset.view_dims, expected))
            if got != want
        ] or [f"data has {dataset.n_views} views, checkpoint expects {len(expected)}"]
        raise DataError("; ".join(bad), dataset_dir)

    os.makedirs(out_dir, exist_ok=True)
    for v, h in enumerate(encode_views(views, ckpt.encoders)):
        _write_feature_csv(os.path.join(out_dir, f"h_{v}.csv"), h)
    z = joint_latent(views, ckpt.encoders, ckpt.supervised)
    _write_feature_csv(os.path.join(out_dir, "z.csv"), z)
    print(out_dir)
    return 0


def cmd_eval(checkpoint_path, config_path, out_dir=None, header=False, strict=False):
    """Run the four-family evaluation protocol and print/write the report."""
    doc = load_config(config_path)
    ckpt = load_checkpoint(checkpoint_path)
    dataset = _dataset_from_config(doc, header=header, strict=strict)
    cfg = _train_config_from_doc(doc, dataset.view_dims, dataset.n_classes)
    if ckpt.arch.view_input_dims != tuple(dataset.view_dims):
        raise DataError(
            f"checkpoint expects view dims {ckpt.arch.view_input_dims}, "
            f"dataset has {dataset.view_dims}",
            checkpoint_path,
        )
    bank = SnapshotBank(ckpt.encoders, ckpt.decoders, ckpt.supervised, ckpt.seed)
    report = evaluate_protocol(
        dataset,
        bank,
        cfg,
        split_ratio=doc.get("split_ratio", 0.5),
        scale=doc.get("scale", False),
        dataset_name=doc.get("dataset", "synth"),
    )
    print(report.format_table())
    out = out_dir or doc.get("out_dir")
    if out:
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "report.json"), "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
            fh.write("\n")
    return 0


def cmd_synth(spec_path, out_dir):
    """Generate a synthetic dataset directory from a generator spec file."""
    sdoc = _load_json(spec_path)
    _check_synth_doc(sdoc, spec_path)
    spec, seed = _synth_from_doc(sdoc)
    dataset = synth_multiview(spec, seed)
    save_dataset(out_dir, dataset)
    print(out_dir)
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="mvcotrain",
        description="Co-trained multi-view autoencoders with a fused joint latent.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run the alternating training schedule")
    p.add_argument("config", help="JSON run config")
    p.add_argument("--out", help="output directory (overrides config out_dir)")
    p.add_argument("--header", action="store_true", help="skip one CSV header line")
    p.add_argument("--strict", action="store_true", help="reject empty class ids")

    p = sub.add_parser("export-latent", help="write per-view and joint latents")
    p.add_argument("checkpoint", help="trained checkpoint (.npz)")
    p.add_argument("dataset", help="dataset directory")
    p.add_argument("out", help="output directory")
    p.add_argument("--header", action="store_true", help="skip one CSV header line")
    p.add_argument("--strict", action="store_true", help="reject empty class ids")

    p = sub.add_parser("eval", help="run the evaluation protocol")
    p.add_argument("checkpoint", help="trained checkpoint (.npz)")
    p.add_argument("config", help="JSON run config (same as used for training)")
    p.add_argument("--out", help="directory for report.json")
    p.add_argument("--header", action="store_true", help="skip one CSV header line")
    p.add_argument("--strict", action="store_true", help="reject empty class ids")

    p = sub.add_parser("synth", help="generate a synthetic dataset directory")
    p.add_argument("spec", help="JSON generator spec")
    p.add_argument("out", help="output directory")
    return parser


def main(argv=None):
    level = os.environ.get("MVCOTRAIN_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "train":
            return cmd_train(
                args.config, out_dir=args.out, header=args.header, strict=args.strict
            )
        if args.command == "export-latent":
            return cmd_export_latent(
                args.checkpoint,
                args.dataset,
                args.out,
                header=args.header,
                strict=args.strict,
            )
        if args.command == "eval":
            return cmd_eval(
                args.checkpoint,
                args.config,
                out_dir=args.out,
                header=args.header,
                strict=args.strict,
            )
        if args.command == "synth":
            return cmd_synth(args.spec, args.out)
        raise ValueError(f"unknown command {args.command!r}")
    except Exception as err:
        if level == "DEBUG":
            log.exception("command failed")
        print(f"mvcotrain: error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
