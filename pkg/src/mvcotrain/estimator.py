"""Estimator-style wrapper around the co-training pipeline.

``CoTrainedFusion`` follows the familiar fit/transform/predict surface:
``fit`` runs the alternating schedule on a list of per-view matrices plus
labels, ``transform`` maps views to the fused joint latent, and
``predict``/``predict_proba`` run the supervised head.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .cotrain import TrainConfig, run_cotraining
from .data import MultiViewDataset
from .networks import ArchSpec, encode_views, joint_latent, predict_proba
from .validation import check_labels, check_views


class CoTrainedFusion(TransformerMixin, BaseEstimator):
    """Joint latent representations from co-trained per-view autoencoders.

    Each view gets a 3-layer encoder/decoder pair; a fusion layer applies
    one weight matrix, shared across views, to every view's latent code and
    sums the results into a joint latent, which a 3-layer softmax head
    classifies.  Training alternates per epoch between reconstruction
    updates of each autoencoder and supervised updates of the head plus all
    encoders, keeping the best-loss parameters of every stage.

    Parameters
    ----------
    encoder_dims : tuple of int, default=(256, 64, 32)
        Strictly decreasing per-layer encoder widths; the last entry is the
        per-view latent size.  Decoder widths are mirrored automatically.
    joint_dim : int, optional
        Width of the fused joint latent; defaults to the per-view latent
        size.
    head_dims : tuple of int, optional
        Widths of the first two supervised layers; the output layer is
        sized by the number of classes.  Defaults to (8 * joint_dim,
        4 * joint_dim); narrow heads underfit multi-class problems badly
        without bias terms.
    epochs : int, default=5
        Alternating-schedule epochs.
    r1, r2 : int, default=1000
        Round budgets for each stage-1 (per view) and stage-2 run.
    lr_ae, lr_sup : float, defaults 0.5 and 0.9
        Learning-rate multipliers for the two stages.
    patience : int, default=200
        Rounds without strict improvement before a stage stops early.
    batch_size : int, optional
        Mini-batch size; None trains full-batch.
    rho, eps : float
        Optimizer decay rate and stabilizer.
    co_training : bool, default=True
        When False only the autoencoders are trained and the supervised
        bundle keeps its initialization.
    random_state : int, default=0
        Seed for initialization and batch shuffling.

    Attributes
    ----------
    classes_ : ndarray
        Sorted unique labels seen in fit.
    encoders_, decoders_, supervised_ :
        Trained parameter bundles (best snapshots).
    arch_ : ArchSpec
        Resolved layer dimensions.
    result_ : TrainResult
        Full training record including per-stage loss traces.
    """

    def __init__(
        self,
        encoder_dims=(256, 64, 32),
        joint_dim=None,
        head_dims=None,
        epochs=5,
        r1=1000,
        r2=1000,
        lr_ae=0.5,
        lr_sup=0.9,
        patience=200,
        batch_size=None,
        rho=0.95,
        eps=1e-6,
        co_training=True,
        random_state=0,
    ):
        self.encoder_dims = encoder_dims
        self.joint_dim = joint_dim
        self.head_dims = head_dims
        self.epochs = epochs
        self.r1 = r1
        self.r2 = r2
        self.lr_ae = lr_ae
        self.lr_sup = lr_sup
        self.patience = patience
        self.batch_size = batch_size
        self.rho = rho
        self.eps = eps
        self.co_training = co_training
        self.random_state = random_state

    def _build_arch(self, view_dims, n_classes):
        joint = self.joint_dim if self.joint_dim is not None else self.encoder_dims[-1]
        head = self.head_dims if self.head_dims is not None else (8 * joint, 4 * joint)
        return ArchSpec(
            view_input_dims=tuple(view_dims),
            encoder_dims=tuple(self.encoder_dims),
            supervised_dims=(*head, n_classes),
            joint_dim=joint,
        )

    def fit(self, Xs, y):
        """Run the alternating schedule on per-view matrices and labels.

        Parameters
        ----------
        Xs : list of ndarray
            One (n_samples, n_features_v) matrix per view.
        y : array-like of shape (n_samples,)
            Class labels; any hashable integers work, they are re-indexed.
        """
        Xs = check_views(Xs)
        y = check_labels(y, Xs[0].shape[0])
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        if self.classes_.size < 2:
            raise ValueError("fit needs at least 2 classes present")
        self.arch_ = self._build_arch([x.shape[1] for x in Xs], self.classes_.size)
        cfg = TrainConfig(
            arch=self.arch_,
            epochs=self.epochs,
            r1=self.r1,
            r2=self.r2,
            lr_ae=self.lr_ae,
            lr_sup=self.lr_sup,
            patience=self.patience,
            batch_size=self.batch_size,
            rho=self.rho,
            eps=self.eps,
            seed=self.random_state,
        )
        dataset = MultiViewDataset(Xs, y_idx, self.classes_.size)
        result = run_cotraining(dataset, cfg, supervised=self.co_training)
        self.result_ = result
        self.encoders_ = result.bank.encoders
        self.decoders_ = result.bank.decoders
        self.supervised_ = result.bank.supervised
        self.config_ = cfg
        return self

    def transform(self, Xs):
        """Fused joint latent, one row per sample."""
        check_is_fitted(self, "encoders_")
        Xs = check_views(Xs)
        return joint_latent(Xs, self.encoders_, self.supervised_)

    def transform_views(self, Xs):
        """Per-view latent codes as a list of matrices."""
        check_is_fitted(self, "encoders_")
        Xs = check_views(Xs)
        return encode_views(Xs, self.encoders_)

    def predict_proba(self, Xs):
        """Class probabilities from the supervised head."""
        check_is_fitted(self, "encoders_")
        Xs = check_views(Xs)
        return predict_proba(Xs, self.encoders_, self.supervised_)

    def predict(self, Xs):
        """Most probable class label per sample."""
        proba = self.predict_proba(Xs)
        return self.classes_[np.argmax(proba, axis=1)]
