"""Training loops for the autoencoders, the segmenter, and the binary
semantic classifiers. Single-threaded, seeded, deterministic: fixed shuffle
streams, fixed batch reduction order.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..rng import make_rng
from .core import Adam
from .losses import chamfer_loss_and_grad, logistic_loss, softmax_cross_entropy
from .models import (BinaryClassifier, ClassifierArch, Decoder, DecoderArch,
                     Encoder, EncoderArch, Segmenter, SegmenterArch)


class TrainingDiverged(RuntimeError):
    """Loss became non-finite; carries the epoch and batch for diagnosis."""


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 24
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    seed: int = 0
    latent_noise_sigma: float = 0.0
    lr_decay: float = 0.0  # lr_epoch = lr / (1 + lr_decay * epoch)

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.lr < 0:
            raise ValueError("learning rate must be nonnegative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)


def _batches(n: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def train_autoencoder(clouds: list[np.ndarray], config: TrainConfig,
                      enc_arch: EncoderArch, dec_arch: DecoderArch):
    """Chamfer-reconstruction training. Returns (enc_params, dec_params,
    per-epoch mean loss curve). Optional Gaussian latent noise acts as a
    smoothness regularizer."""
    if not clouds:
        raise ValueError("empty training set")
    enc = Encoder(enc_arch)
    dec = Decoder(dec_arch)
    enc_params = enc.init_params(config.seed)
    dec_params = dec.init_params(config.seed + 1)
    opt_e = Adam(enc_params, config.lr, config.beta1, config.beta2, config.eps,
                 config.weight_decay)
    opt_d = Adam(dec_params, config.lr, config.beta1, config.beta2, config.eps,
                 config.weight_decay)
    shuffle_rng = make_rng(config.seed, "ae-shuffle")
    noise_rng = make_rng(config.seed, "ae-latent-noise")
    data = np.stack(clouds)
    curve: list[float] = []
    for epoch in range(config.epochs):
        opt_e.lr = opt_d.lr = config.lr / (1.0 + config.lr_decay * epoch)
        epoch_sum = 0.0
        for batch in _batches(len(clouds), config.batch_size, shuffle_rng):
            x = data[batch]
            z, cache_e = enc.forward(enc_params, x)
            if config.latent_noise_sigma > 0:
                z = z + noise_rng.normal(0.0, config.latent_noise_sigma, size=z.shape)
            pred, cache_d = dec.forward(dec_params, z)
            b = x.shape[0]
            dpred = np.empty_like(pred)
            batch_loss = 0.0
            for i in range(b):
                loss_i, grad_i = chamfer_loss_and_grad(pred[i], x[i])
                batch_loss += loss_i
                dpred[i] = grad_i / b
            batch_loss /= b
            if not np.isfinite(batch_loss):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, batch of {b}")
            epoch_sum += batch_loss * b
            grads_d, dz = dec.backward(dec_params, cache_d, dpred)
            grads_e = enc.backward(enc_params, cache_e, dz)
            opt_d.step(dec_params, grads_d)
            opt_e.step(enc_params, grads_e)
        curve.append(epoch_sum / len(clouds))
    return enc_params, dec_params, curve


def encode_clouds(enc: Encoder, params: dict, clouds, batch_size: int = 64) -> np.ndarray:
    out = []
    for start in range(0, len(clouds), batch_size):
        x = np.stack(clouds[start:start + batch_size])
        z, _ = enc.forward(params, x)
        out.append(z)
    return np.concatenate(out)


def decode_latents(dec: Decoder, params: dict, latents: np.ndarray,
                   batch_size: int = 64) -> np.ndarray:
    out = []
    for start in range(0, len(latents), batch_size):
        pred, _ = dec.forward(params, latents[start:start + batch_size])
        out.append(pred)
    return np.concatenate(out)


def train_segmenter(clouds: list[np.ndarray], labels: list[np.ndarray],
                    config: TrainConfig, arch: SegmenterArch,
                    heldout_clouds=None, heldout_labels=None):
    """Per-point part classifier. Returns (params, heldout accuracy or None,
    loss curve)."""
    if not clouds:
        raise ValueError("empty training set")
    model = Segmenter(arch)
    params = model.init_params(config.seed)
    opt = Adam(params, config.lr, config.beta1, config.beta2, config.eps,
               config.weight_decay)
    shuffle_rng = make_rng(config.seed, "seg-shuffle")
    data = np.stack(clouds)
    lab = np.stack(labels)
    curve: list[float] = []
    for epoch in range(config.epochs):
        opt.lr = config.lr / (1.0 + config.lr_decay * epoch)
        epoch_sum = 0.0
        for batch in _batches(len(clouds), config.batch_size, shuffle_rng):
            x, y = data[batch], lab[batch]
            logits, cache = model.forward(params, x)
            loss, dlogits = softmax_cross_entropy(logits, y)
            if not np.isfinite(loss):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}")
            epoch_sum += loss * x.shape[0]
            grads = model.backward(params, cache, dlogits)
            opt.step(params, grads)
        curve.append(epoch_sum / len(clouds))
    heldout_acc = None
    if heldout_clouds is not None:
        heldout_acc = segmenter_accuracy(model, params, heldout_clouds, heldout_labels)
    return params, heldout_acc, curve


def segment_points(model: Segmenter, params: dict, cloud: np.ndarray) -> np.ndarray:
    logits, _ = model.forward(params, cloud[None])
    return logits[0].argmax(axis=1)


def segmenter_accuracy(model: Segmenter, params: dict, clouds, labels) -> float:
    correct = 0
    total = 0
    for start in range(0, len(clouds), 64):
        x = np.stack(clouds[start:start + 64])
        y = np.stack(labels[start:start + 64])
        logits, _ = model.forward(params, x)
        correct += int((logits.argmax(axis=2) == y).sum())
        total += y.size
    return correct / total


def train_classifier(positives: list[np.ndarray], negatives: list[np.ndarray],
                     config: TrainConfig, arch: ClassifierArch,
                     holdout_fraction: float = 0.2):
    """Binary semantic classifier with class-balanced logistic loss and an
    internal stratified holdout split. Returns (params, heldout accuracy,
    loss curve)."""
    if not positives or not negatives:
        raise ValueError("both classes must be non-empty")
    split_rng = make_rng(config.seed, "cls-split")

    def split(items):
        idx = split_rng.permutation(len(items))
        n_hold = max(1, int(round(holdout_fraction * len(items)))) if len(items) > 1 else 0
        hold = [items[i] for i in idx[:n_hold]]
        train = [items[i] for i in idx[n_hold:]]
        return train, hold

    pos_tr, pos_ho = split(positives)
    neg_tr, neg_ho = split(negatives)
    x_all = np.stack(pos_tr + neg_tr)
    y_all = np.concatenate([np.ones(len(pos_tr)), -np.ones(len(neg_tr))])
    model = BinaryClassifier(arch)
    params = model.init_params(config.seed)
    opt = Adam(params, config.lr, config.beta1, config.beta2, config.eps,
               config.weight_decay)
    shuffle_rng = make_rng(config.seed, "cls-shuffle")
    curve: list[float] = []
    for epoch in range(config.epochs):
        opt.lr = config.lr / (1.0 + config.lr_decay * epoch)
        epoch_sum = 0.0
        n_seen = 0
        for batch in _batches(len(x_all), config.batch_size, shuffle_rng):
            x, y = x_all[batch], y_all[batch]
            n_pos = max(int((y > 0).sum()), 1)
            n_neg = max(int((y < 0).sum()), 1)
            w = np.where(y > 0, 0.5 / n_pos, 0.5 / n_neg)
            w /= w.sum()
            logits, cache = model.forward(params, x)
            loss, dlogits = logistic_loss(logits, y, w)
            if not np.isfinite(loss):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}")
            epoch_sum += loss * x.shape[0]
            n_seen += x.shape[0]
            grads = model.backward(params, cache, dlogits)
            opt.step(params, grads)
        curve.append(epoch_sum / max(n_seen, 1))
    x_ho = pos_ho + neg_ho
    y_ho = np.concatenate([np.ones(len(pos_ho)), -np.ones(len(neg_ho))])
    if x_ho:
        preds = classify_clouds(model, params, x_ho)
        heldout_acc = float(((preds > 0.5) == (y_ho > 0)).mean())
    else:
        heldout_acc = float("nan")
    return params, heldout_acc, curve


def classify_clouds(model: BinaryClassifier, params: dict, clouds) -> np.ndarray:
    """Positive-class probabilities for a list of clouds."""
    out = []
    for start in range(0, len(clouds), 64):
        x = np.stack(clouds[start:start + 64])
        logits, _ = model.forward(params, x)
        out.append(1.0 / (1.0 + np.exp(-logits)))
    return np.concatenate(out)
