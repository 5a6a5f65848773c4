"""The two fixed network shapes and their hand-derived backward passes.

Per view there is an autoencoder: a 3-layer encoder (ReLU after every layer,
the third activation is the latent feature h) and a 3-layer decoder (ReLU
except the final, linear reconstruction layer).  The supervised fusion
network reuses the encoder weights verbatim: each view's latent is mapped by
ONE shared matrix, the mapped latents are summed and passed through ReLU to
give the joint latent z, and a 3-layer head (ReLU, ReLU, softmax) predicts
class probabilities.

No layer anywhere carries a bias term; the parameter sets are weight
matrices only.  Gradients are hand-derived for exactly these two shapes.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from . import ops
from .exceptions import ShapeError
from .ops import matmul, relu, relu_mask, softmax_rows


@dataclass(frozen=True)
class ArchSpec:
    """Layer widths for the per-view autoencoders and the fusion network.

    Parameters
    ----------
    view_input_dims : tuple of int
        Feature count of each view.
    encoder_dims : tuple of 3 ints
        Encoder layer widths (e1, e2, d), strictly decreasing; d is the
        latent dimension and is shared by every view.  Decoder widths are
        derived by mirroring: (e2, e1, view dim).
    supervised_dims : tuple of 3 ints
        Head layer widths (s1, s2, K); K is the class count.
    joint_dim : int, optional
        Width of the fused (joint latent) layer.  Defaults to d.
    """

    view_input_dims: tuple
    encoder_dims: tuple
    supervised_dims: tuple
    joint_dim: int = None

    def __post_init__(self):
        object.__setattr__(self, "view_input_dims", tuple(int(m) for m in self.view_input_dims))
        object.__setattr__(self, "encoder_dims", tuple(int(w) for w in self.encoder_dims))
        object.__setattr__(self, "supervised_dims", tuple(int(w) for w in self.supervised_dims))
        if not self.view_input_dims:
            raise ValueError("need at least one view")
        if len(self.encoder_dims) != 3:
            raise ValueError(f"encoder_dims must have 3 widths, got {self.encoder_dims}")
        if len(self.supervised_dims) != 3:
            raise ValueError(f"supervised_dims must have 3 widths, got {self.supervised_dims}")
        if self.joint_dim is None:
            object.__setattr__(self, "joint_dim", self.encoder_dims[-1])
        object.__setattr__(self, "joint_dim", int(self.joint_dim))
        widths = self.view_input_dims + self.encoder_dims + self.supervised_dims + (self.joint_dim,)
        if any(w < 1 for w in widths):
            raise ValueError(f"all widths must be >= 1, got {widths}")
        e1, e2, d = self.encoder_dims
        if not e1 > e2 > d:
            raise ValueError(f"encoder widths must be strictly decreasing, got {self.encoder_dims}")

    @property
    def n_views(self):
        return len(self.view_input_dims)

    @property
    def latent_dim(self):
        return self.encoder_dims[-1]

    @property
    def n_classes(self):
        return self.supervised_dims[-1]

    def decoder_dims(self, view):
        """Decoder layer widths for ``view``: (e2, e1, M_view)."""
        e1, e2, _ = self.encoder_dims
        return (e2, e1, self.view_input_dims[view])

    def to_dict(self):
        return {
            "view_input_dims": list(self.view_input_dims),
            "encoder_dims": list(self.encoder_dims),
            "supervised_dims": list(self.supervised_dims),
            "joint_dim": self.joint_dim,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            view_input_dims=tuple(d["view_input_dims"]),
            encoder_dims=tuple(d["encoder_dims"]),
            supervised_dims=tuple(d["supervised_dims"]),
            joint_dim=d.get("joint_dim"),
        )


def _fingerprint(arrays):
    h = hashlib.sha256()
    for a in arrays:
        h.update(str(a.shape).encode())
        h.update(np.ascontiguousarray(a, dtype=np.float64).tobytes())
    return h.hexdigest()


@dataclass
class EncoderParams:
    """The three encoder weight matrices of one view."""

    weights: list

    def copy(self):
        return EncoderParams([w.copy() for w in self.weights])

    def fingerprint(self):
        return _fingerprint(self.weights)


@dataclass
class DecoderParams:
    """The three decoder weight matrices of one view."""

    weights: list

    def copy(self):
        return DecoderParams([w.copy() for w in self.weights])

    def fingerprint(self):
        return _fingerprint(self.weights)


@dataclass
class SupervisedParams:
    """The shared view-to-joint transform plus the three head matrices."""

    w_share: np.ndarray
    head: list

    def copy(self):
        return SupervisedParams(self.w_share.copy(), [w.copy() for w in self.head])

    def fingerprint(self):
        return _fingerprint([self.w_share] + self.head)


@dataclass
class EncodeCache:
    """Pre/post activations of one encoder pass."""

    z1: np.ndarray
    a1: np.ndarray
    z2: np.ndarray
    a2: np.ndarray
    z3: np.ndarray
    h: np.ndarray


@dataclass
class AeCache:
    """Everything the autoencoder backward pass needs."""

    enc: EncodeCache
    z4: np.ndarray
    b1: np.ndarray
    z5: np.ndarray
    b2: np.ndarray
    xhat: np.ndarray


@dataclass
class SupCache:
    """Everything the supervised backward pass needs."""

    enc: list = field(default_factory=list)  # one EncodeCache per view
    s: np.ndarray = None
    z: np.ndarray = None
    t1: np.ndarray = None
    c1: np.ndarray = None
    t2: np.ndarray = None
    c2: np.ndarray = None
    logits: np.ndarray = None
    yhat: np.ndarray = None


def _encode(x, enc):
    w1, w2, w3 = enc.weights
    z1 = matmul(x, w1)
    a1 = relu(z1)
    z2 = matmul(a1, w2)
    a2 = relu(z2)
    z3 = matmul(a2, w3)
    return EncodeCache(z1, a1, z2, a2, z3, relu(z3))


def _encode_backward(cache, x, enc, g_h):
    """Gradients of the encoder weights given the gradient at h."""
    w1, w2, w3 = enc.weights
    g_z3 = g_h * relu_mask(cache.z3)
    g_w3 = matmul(cache.a2.T, g_z3)
    g_z2 = matmul(g_z3, w3.T) * relu_mask(cache.z2)
    g_w2 = matmul(cache.a1.T, g_z2)
    g_z1 = matmul(g_z2, w2.T) * relu_mask(cache.z1)
    g_w1 = matmul(x.T, g_z1)
    return [g_w1, g_w2, g_w3]


def ae_forward(x, enc, dec):
    """Autoencoder forward pass.

    Returns (cache, h, xhat) where h is the third encoder activation and
    xhat the linear reconstruction.
    """
    ec = _encode(x, enc)
    d1, d2, d3 = dec.weights
    z4 = matmul(ec.h, d1)
    b1 = relu(z4)
    z5 = matmul(b1, d2)
    b2 = relu(z5)
    xhat = matmul(b2, d3)
    cache = AeCache(ec, z4, b1, z5, b2, xhat)
    return cache, ec.h, xhat


def ae_backward(cache, x, enc, dec):
    """Gradients of the reconstruction loss for every autoencoder weight.

    ``cache`` must come from :func:`ae_forward` on the same (x, enc, dec).
    Returns (encoder grads, decoder grads, loss).
    """
    d1, d2, d3 = dec.weights
    loss = ops.recon_loss(x, cache.xhat)
    g = ops.recon_loss_grad(x, cache.xhat)
    g_d3 = matmul(cache.b2.T, g)
    g_z5 = matmul(g, d3.T) * relu_mask(cache.z5)
    g_d2 = matmul(cache.b1.T, g_z5)
    g_z4 = matmul(g_z5, d2.T) * relu_mask(cache.z4)
    g_d1 = matmul(cache.enc.h.T, g_z4)
    g_h = matmul(g_z4, d1.T)
    grads_enc = _encode_backward(cache.enc, x, enc, g_h)
    return grads_enc, [g_d1, g_d2, g_d3], loss


def sup_forward(views, encoders, sup):
    """Fusion network forward pass.

    Each view is encoded with its own (shared-with-autoencoder) encoder, the
    latents are mapped by the single shared matrix and summed, and ReLU of
    the sum is the joint latent z.  Returns (cache, z, yhat).
    """
    if len(views) != len(encoders):
        raise ValueError(f"got {len(views)} views but {len(encoders)} encoders")
    cache = SupCache()
    s = None
    for x, enc in zip(views, encoders):
        ec = _encode(x, enc)
        cache.enc.append(ec)
        contrib = matmul(ec.h, sup.w_share)
        s = contrib if s is None else s + contrib
    u1, u2, u3 = sup.head
    cache.s = s
    cache.z = relu(s)
    cache.t1 = matmul(cache.z, u1)
    cache.c1 = relu(cache.t1)
    cache.t2 = matmul(cache.c1, u2)
    cache.c2 = relu(cache.t2)
    cache.logits = matmul(cache.c2, u3)
    cache.yhat = softmax_rows(cache.logits)
    return cache, cache.z, cache.yhat


def sup_backward(cache, views, labels_onehot, encoders, sup):
    """Cross-entropy gradients for the fusion network AND the encoders.

    The shared matrix accumulates one contribution per view; the gradient
    also flows through every encoder, which is what lets the supervised
    stage meliorate the per-view latents.  Returns
    (supervised grads, per-view encoder grads, loss).
    """
    u1, u2, u3 = sup.head
    loss = ops.ce_loss(cache.yhat, labels_onehot)
    g_logits = ops.ce_logit_grad(cache.yhat, labels_onehot)
    g_u3 = matmul(cache.c2.T, g_logits)
    g_t2 = matmul(g_logits, u3.T) * relu_mask(cache.t2)
    g_u2 = matmul(cache.c1.T, g_t2)
    g_t1 = matmul(g_t2, u2.T) * relu_mask(cache.t1)
    g_u1 = matmul(cache.z.T, g_t1)
    g_s = matmul(g_t1, u1.T) * relu_mask(cache.s)

    g_share = np.zeros_like(sup.w_share)
    grads_enc = []
    for x, enc, ec in zip(views, encoders, cache.enc):
        g_share += matmul(ec.h.T, g_s)
        g_h = matmul(g_s, sup.w_share.T)
        grads_enc.append(_encode_backward(ec, x, enc, g_h))
    grads_sup = SupervisedParams(g_share, [g_u1, g_u2, g_u3])
    return grads_sup, grads_enc, loss


def init_model(arch, seed):
    """Xavier-initialize every weight matrix of the model.

    Each matrix gets its own child of ``numpy.random.SeedSequence(seed)``,
    spawned in a fixed order (per-view encoders, per-view decoders, shared
    matrix, head), so the same (arch, seed) always produces bitwise-identical
    bundles.  Returns (encoders, decoders, supervised).
    """
    seeds = iter(np.random.SeedSequence(seed).spawn(6 * arch.n_views + 4))
    e1, e2, d = arch.encoder_dims
    s1, s2, k = arch.supervised_dims
    encoders = []
    for m in arch.view_input_dims:
        dims = (m, e1, e2, d)
        encoders.append(
            EncoderParams([ops.xavier_init(a, b, next(seeds)) for a, b in zip(dims, dims[1:])])
        )
    decoders = []
    for v, _ in enumerate(arch.view_input_dims):
        dims = (d,) + arch.decoder_dims(v)
        decoders.append(
            DecoderParams([ops.xavier_init(a, b, next(seeds)) for a, b in zip(dims, dims[1:])])
        )
    w_share = ops.xavier_init(d, arch.joint_dim, next(seeds))
    dims = (arch.joint_dim, s1, s2, k)
    head = [ops.xavier_init(a, b, next(seeds)) for a, b in zip(dims, dims[1:])]
    return encoders, decoders, SupervisedParams(w_share, head)


def encode_views(views, encoders):
    """Per-view latent features h_v for already-trained encoders."""
    return [_encode(x, enc).h for x, enc in zip(views, encoders)]


def joint_latent(views, encoders, sup):
    """Joint latent z = ReLU(sum over views of h_v @ w_share)."""
    cache, z, _ = sup_forward(views, encoders, sup)
    return z


def predict_proba(views, encoders, sup):
    """Class probabilities from the supervised head."""
    _, _, yhat = sup_forward(views, encoders, sup)
    return yhat


def _check_views_against_arch(views, arch):
    if len(views) != arch.n_views:
        raise ValueError(f"model has {arch.n_views} views, got {len(views)}")
    for v, (x, m) in enumerate(zip(views, arch.view_input_dims)):
        if x.shape[1] != m:
            raise ShapeError(f"view {v} has {x.shape[1]} features, model expects {m}")


def save_checkpoint(path, encoders, decoders, supervised, arch, seed, meta=None):
    """Serialize parameter bundles to an ``.npz`` checkpoint.

    The archive holds every weight matrix (row-major float64) under keys
    ``enc{v}_w{i}``, ``dec{v}_w{i}``, ``sup_share`` and ``sup_head{i}``,
    plus the architecture as JSON, the master seed, and optional metadata.
    """
    arrays = {
        "arch_json": np.array(json.dumps(arch.to_dict())),
        "seed": np.array(int(seed), dtype=np.uint64),
        "meta_json": np.array(json.dumps(meta or {})),
    }
    for v, (enc, dec) in enumerate(zip(encoders, decoders)):
        for i, w in enumerate(enc.weights):
            arrays[f"enc{v}_w{i}"] = w
        for i, w in enumerate(dec.weights):
            arrays[f"dec{v}_w{i}"] = w
    arrays["sup_share"] = supervised.w_share
    for i, w in enumerate(supervised.head):
        arrays[f"sup_head{i}"] = w
    np.savez(path, **arrays)


@dataclass
class Checkpoint:
    arch: ArchSpec
    seed: int
    encoders: list
    decoders: list
    supervised: SupervisedParams
    meta: dict


def load_checkpoint(path):
    """Load a checkpoint written by :func:`save_checkpoint`."""
    with np.load(path, allow_pickle=False) as data:
        arch = ArchSpec.from_dict(json.loads(str(data["arch_json"])))
        seed = int(data["seed"])
        meta = json.loads(str(data["meta_json"]))
        encoders = [
            EncoderParams([data[f"enc{v}_w{i}"] for i in range(3)])
            for v in range(arch.n_views)
        ]
        decoders = [
            DecoderParams([data[f"dec{v}_w{i}"] for i in range(3)])
            for v in range(arch.n_views)
        ]
        supervised = SupervisedParams(
            data["sup_share"], [data[f"sup_head{i}"] for i in range(3)]
        )
    return Checkpoint(arch, seed, encoders, decoders, supervised, meta)
