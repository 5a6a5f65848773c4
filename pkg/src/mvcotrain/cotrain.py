"""Alternating two-stage co-training scheduler.

Each epoch runs stage 1 (per-view autoencoder training on reconstruction
loss) for every view, then stage 2 (supervised training of the fusion
network and all encoders jointly on cross-entropy).  Within a stage the
parameters from the least-loss round are snapshotted into a bank, and the
bank wires stages together across epochs:

- stage 1 of epoch e starts its encoder from the stage-2 best of epoch
  e-1 and its decoder from the stage-1 best of epoch e-1,
- stage 2 of epoch e starts its encoders from the stage-1 bests of epoch
  e itself and its supervised params from the stage-2 best of epoch e-1,
- epoch 1 starts everything from the seeded uniform init.

Optimizer accumulators are fresh at every stage; only parameters cross
stage boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .adadelta import AdaDelta
from .data import batches
from .exceptions import StateError
from .networks import (
    ArchSpec,
    _check_views_against_arch,
    ae_backward,
    ae_forward,
    init_model,
    sup_backward,
    sup_forward,
)
from .ops import ce_loss, one_hot, recon_loss


@dataclass
class TrainConfig:
    """Hyperparameters for one co-training run.

    ``r1``/``r2`` are the per-stage round budgets (stage 1 per view and
    stage 2 respectively); a stage ends early once its loss has not
    strictly improved for ``patience`` rounds.  ``batch_size=None`` means
    full-batch updates.
    """

    arch: ArchSpec
    epochs: int = 5
    r1: int = 1000
    r2: int = 1000
    lr_ae: float = 0.5
    lr_sup: float = 0.9
    patience: int = 200
    batch_size: int = None
    rho: float = 0.95
    eps: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.r1 < 1 or self.r2 < 1:
            raise ValueError(f"r1 and r2 must be >= 1, got {self.r1}, {self.r2}")
        if self.patience < 1:
            raise ValueError(f"patience must be >= 1, got {self.patience}")
        if self.lr_ae <= 0 or self.lr_sup <= 0:
            raise ValueError("learning rates must be positive")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1 or None, got {self.batch_size}")

    def to_dict(self):
        return {
            "arch": self.arch.to_dict(),
            "epochs": self.epochs,
            "r1": self.r1,
            "r2": self.r2,
            "lr_ae": self.lr_ae,
            "lr_sup": self.lr_sup,
            "patience": self.patience,
            "batch_size": self.batch_size,
            "rho": self.rho,
            "eps": self.eps,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["arch"] = ArchSpec.from_dict(d["arch"])
        return cls(**d)


class LossTrace:
    """Per-round loss values with first-best bookkeeping (rounds are 1-based)."""

    def __init__(self):
        self.values = []
        self.best_round = 0
        self.best_loss = float("inf")

    def record(self, loss):
        self.values.append(float(loss))
        if loss < self.best_loss:
            self.best_loss = float(loss)
            self.best_round = len(self.values)

    @property
    def rounds(self):
        return len(self.values)


def early_stop_check(trace, patience):
    """True once the best loss is at least ``patience`` rounds old.

    Never fires before round ``patience``; a strict improvement resets the
    countdown.
    """
    if trace.rounds == 0:
        raise ValueError("trace is empty")
    return trace.rounds >= patience and trace.rounds - trace.best_round >= patience


@dataclass
class StageResult:
    """Outcome of one stage: its loss trace plus snapshot provenance.

    ``view`` is -1 for stage 2 (which trains across all views).
    ``start_fp``/``best_fp`` hold parameter fingerprints at stage entry and
    of the snapshot written back to the bank, keyed by bundle name.
    """

    epoch: int
    stage: int
    view: int
    trace: LossTrace
    stopped_early: bool
    start_fp: dict
    best_fp: dict

    @property
    def best_round(self):
        return self.trace.best_round

    @property
    def best_loss(self):
        return self.trace.best_loss


class SnapshotBank:
    """Best-parameter store that wires stages together.

    Holds the current best encoder/decoder per view and the supervised
    bundle, each tagged with the (epoch, stage, round) it was captured at
    (round 0 = initialization).  Stage runners read their starting
    parameters from here and write their best snapshots back.
    """

    def __init__(self, encoders, decoders, supervised, seed):
        self.encoders = encoders
        self.decoders = decoders
        self.supervised = supervised
        self.seed = seed
        n = len(encoders)
        self.provenance = {
            **{("enc", v): (0, 0, 0) for v in range(n)},
            **{("dec", v): (0, 0, 0) for v in range(n)},
            ("sup",): (0, 0, 0),
        }
        self.completed = set()

    @property
    def n_views(self):
        return len(self.encoders)

    def fingerprints(self):
        fp = {}
        for v in range(self.n_views):
            fp[f"encoder_{v}"] = self.encoders[v].fingerprint()
            fp[f"decoder_{v}"] = self.decoders[v].fingerprint()
        fp["supervised"] = self.supervised.fingerprint()
        return fp

    def require_ready(self, epoch, stage, view=None):
        if epoch > 1 and (epoch - 1, 2) not in self.completed:
            raise StateError(
                f"epoch {epoch} stage {stage} requires stage 2 of epoch {epoch - 1}"
            )
        if stage == 2:
            missing = [
                v for v in range(self.n_views) if (epoch, 1, v) not in self.completed
            ]
            if missing:
                raise StateError(
                    f"stage 2 of epoch {epoch} requires stage 1 for views {missing}"
                )
        key = (epoch, 2) if stage == 2 else (epoch, 1, view)
        if key in self.completed:
            raise StateError(f"epoch {epoch} stage {stage} already completed")

    def mark_stage2_skipped(self, epoch):
        """Unlock the next epoch when stage 2 is intentionally not run."""
        self.completed.add((epoch, 2))


def _drive_rounds(n_rounds, patience, do_round, snapshot):
    """Run up to ``n_rounds`` of ``do_round``, snapshotting on first-best.

    Round r's recorded loss is whatever ``do_round(r)`` returns; whenever
    that loss strictly beats all earlier rounds, ``snapshot()`` captures the
    parameters as they stand at the end of the round.
    """
    trace = LossTrace()
    best = None
    stopped = False
    for r in range(1, n_rounds + 1):
        trace.record(do_round(r))
        if trace.best_round == r:
            best = snapshot()
        if early_stop_check(trace, patience):
            stopped = True
            break
    return trace, best, stopped


def run_stage1(view_index, train_x, bank, cfg, epoch):
    """Train one view's autoencoder and bank the least-recon-loss round."""
    bank.require_ready(epoch, 1, view_index)
    x = np.ascontiguousarray(train_x, dtype=np.float64)
    enc = bank.encoders[view_index].copy()
    dec = bank.decoders[view_index].copy()
    start_fp = {"encoder": enc.fingerprint(), "decoder": dec.fingerprint()}

    opts = [
        AdaDelta(w.shape, rho=cfg.rho, eps=cfg.eps, lr=cfg.lr_ae)
        for w in enc.weights + dec.weights
    ]

    def apply(grads_enc, grads_dec):
        for i, g in enumerate(grads_enc):
            enc.weights[i] = opts[i].step(enc.weights[i], g)
        for i, g in enumerate(grads_dec):
            dec.weights[i] = opts[3 + i].step(dec.weights[i], g)

    if cfg.batch_size is None:
        cache, _, xhat = ae_forward(x, enc, dec)

        def do_round(r):
            nonlocal cache, xhat
            g_enc, g_dec, _ = ae_backward(cache, x, enc, dec)
            apply(g_enc, g_dec)
            cache, _, xhat = ae_forward(x, enc, dec)
            return recon_loss(x, xhat)

    else:

        def do_round(r):
            seed = np.random.SeedSequence([cfg.seed, epoch, 1, view_index + 1, r])
            losses = []
            for idx in batches(x.shape[0], cfg.batch_size, seed):
                xb = x[idx]
                cache, _, _ = ae_forward(xb, enc, dec)
                g_enc, g_dec, loss = ae_backward(cache, xb, enc, dec)
                losses.append(loss)
                apply(g_enc, g_dec)
            return float(np.mean(losses))

    trace, best, stopped = _drive_rounds(
        cfg.r1, cfg.patience, do_round, lambda: (enc.copy(), dec.copy())
    )
    best_enc, best_dec = best
    bank.encoders[view_index] = best_enc
    bank.decoders[view_index] = best_dec
    bank.provenance[("enc", view_index)] = (epoch, 1, trace.best_round)
    bank.provenance[("dec", view_index)] = (epoch, 1, trace.best_round)
    bank.completed.add((epoch, 1, view_index))
    best_fp = {"encoder": best_enc.fingerprint(), "decoder": best_dec.fingerprint()}
    return StageResult(epoch, 1, view_index, trace, stopped, start_fp, best_fp)


def run_stage2(train_views, labels, bank, cfg, epoch):
    """Train the fusion network and all encoders jointly; bank the best round."""
    bank.require_ready(epoch, 2)
    views = [np.ascontiguousarray(x, dtype=np.float64) for x in train_views]
    y = one_hot(labels, cfg.arch.n_classes)
    encoders = [bank.encoders[v].copy() for v in range(bank.n_views)]
    sup = bank.supervised.copy()
    start_fp = {f"encoder_{v}": e.fingerprint() for v, e in enumerate(encoders)}
    start_fp["supervised"] = sup.fingerprint()

    enc_opts = [
        [AdaDelta(w.shape, rho=cfg.rho, eps=cfg.eps, lr=cfg.lr_sup) for w in e.weights]
        for e in encoders
    ]
    share_opt = AdaDelta(sup.w_share.shape, rho=cfg.rho, eps=cfg.eps, lr=cfg.lr_sup)
    head_opts = [
        AdaDelta(w.shape, rho=cfg.rho, eps=cfg.eps, lr=cfg.lr_sup) for w in sup.head
    ]

    def apply(g_sup, g_enc):
        for v, grads in enumerate(g_enc):
            for i, g in enumerate(grads):
                encoders[v].weights[i] = enc_opts[v][i].step(encoders[v].weights[i], g)
        sup.w_share = share_opt.step(sup.w_share, g_sup.w_share)
        for i, g in enumerate(g_sup.head):
            sup.head[i] = head_opts[i].step(sup.head[i], g)

    if cfg.batch_size is None:
        cache, _, yhat = sup_forward(views, encoders, sup)

        def do_round(r):
            nonlocal cache, yhat
            g_sup, g_enc, _ = sup_backward(cache, views, y, encoders, sup)
            apply(g_sup, g_enc)
            cache, _, yhat = sup_forward(views, encoders, sup)
            return ce_loss(yhat, y)

    else:

        def do_round(r):
            seed = np.random.SeedSequence([cfg.seed, epoch, 2, 0, r])
            losses = []
            for idx in batches(views[0].shape[0], cfg.batch_size, seed):
                vb = [x[idx] for x in views]
                cache, _, _ = sup_forward(vb, encoders, sup)
                g_sup, g_enc, loss = sup_backward(cache, vb, y[idx], encoders, sup)
                losses.append(loss)
                apply(g_sup, g_enc)
            return float(np.mean(losses))

    trace, best, stopped = _drive_rounds(
        cfg.r2,
        cfg.patience,
        do_round,
        lambda: ([e.copy() for e in encoders], sup.copy()),
    )
    best_encoders, best_sup = best
    for v in range(bank.n_views):
        bank.encoders[v] = best_encoders[v]
        bank.provenance[("enc", v)] = (epoch, 2, trace.best_round)
    bank.supervised = best_sup
    bank.provenance[("sup",)] = (epoch, 2, trace.best_round)
    bank.completed.add((epoch, 2))
    best_fp = {f"encoder_{v}": e.fingerprint() for v, e in enumerate(best_encoders)}
    best_fp["supervised"] = best_sup.fingerprint()
    return StageResult(epoch, 2, -1, trace, stopped, start_fp, best_fp)


@dataclass
class TrainResult:
    """Final bank plus every per-stage trace and the init fingerprints."""

    bank: SnapshotBank
    stages: list
    init_fp: dict

    def stage_results(self, epoch=None, stage=None, view=None):
        out = [
            s
            for s in self.stages
            if (epoch is None or s.epoch == epoch)
            and (stage is None or s.stage == stage)
            and (view is None or s.view == view)
        ]
        return out


def run_cotraining(dataset, cfg, supervised=True, on_epoch_end=None):
    """Full alternating schedule over ``cfg.epochs`` epochs.

    With ``supervised=False`` only stage 1 runs (plain per-view autoencoder
    training); the supervised bundle keeps its initialization.
    """
    if dataset.n_samples == 0:
        raise ValueError("dataset is empty")
    _check_views_against_arch(dataset.views, cfg.arch)
    if supervised:
        if len(np.unique(dataset.labels)) < 2:
            raise ValueError("co-training needs at least 2 classes present")
        if dataset.n_classes != cfg.arch.n_classes:
            raise ValueError(
                f"dataset has {dataset.n_classes} classes but the head "
                f"outputs {cfg.arch.n_classes}"
            )

    encoders, decoders, sup = init_model(cfg.arch, cfg.seed)
    bank = SnapshotBank(encoders, decoders, sup, cfg.seed)
    init_fp = bank.fingerprints()
    stages = []
    for epoch in range(1, cfg.epochs + 1):
        for v in range(bank.n_views):
            try:
                stages.append(run_stage1(v, dataset.views[v], bank, cfg, epoch))
            except Exception as err:
                err.args = (f"epoch {epoch} stage 1 view {v}: {err}",)
                raise
        if supervised:
            try:
                stages.append(run_stage2(dataset.views, dataset.labels, bank, cfg, epoch))
            except Exception as err:
                err.args = (f"epoch {epoch} stage 2: {err}",)
                raise
        else:
            bank.mark_stage2_skipped(epoch)
        if on_epoch_end is not None:
            on_epoch_end(epoch, bank)
    return TrainResult(bank, stages, init_fp)


def write_traces_csv(path, stage_results):
    """Dump every per-round loss as ``epoch,stage,view,round,loss`` rows."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch,stage,view,round,loss\n")
        for s in stage_results:
            for r, loss in enumerate(s.trace.values, start=1):
                fh.write(f"{s.epoch},{s.stage},{s.view},{r},{repr(loss)}\n")
