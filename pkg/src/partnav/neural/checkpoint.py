"""Checkpoint persistence: one canonical JSON document per trained model.

The file holds {format_version, arch, shapes, params (flat decimal arrays),
train_config, seed, loss_curve, metadata}. The checkpoint id is the sha256
of the canonical byte stream, so banks can pin exactly which latent space
they were built against. Shapes are validated on load.
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .models import (BinaryClassifier, ClassifierArch, Decoder, DecoderArch,
                     Encoder, EncoderArch, Segmenter, SegmenterArch)

FORMAT_VERSION = 1


class CheckpointError(ValueError):
    """Malformed or mismatched checkpoint document."""


def _canonical(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


@dataclass
class Checkpoint:
    kind: str
    arch: dict
    params: dict
    train_config: dict
    seed: int
    loss_curve: list[float]
    metadata: dict = field(default_factory=dict)
    hash: str = ""

    def to_doc(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "kind": self.kind,
            "arch": self.arch,
            "shapes": {k: list(v.shape) for k, v in sorted(self.params.items())},
            "params": {k: [float(x) for x in v.ravel()] for k, v in sorted(self.params.items())},
            "train_config": self.train_config,
            "seed": self.seed,
            "loss_curve": [float(x) for x in self.loss_curve],
            "metadata": self.metadata,
        }

    def save(self, path: str | os.PathLike) -> str:
        text = _canonical(self.to_doc())
        self.hash = hashlib.sha256(text.encode()).hexdigest()
        with open(path, "w") as fh:
            fh.write(text)
        return self.hash

    @classmethod
    def load(cls, path: str | os.PathLike) -> "Checkpoint":
        with open(path) as fh:
            text = fh.read()
        doc = json.loads(text)
        if doc.get("format_version") != FORMAT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version in {path}")
        params = {}
        for key, flat in doc["params"].items():
            shape = tuple(doc["shapes"][key])
            arr = np.asarray(flat, dtype=np.float64)
            if arr.size != int(np.prod(shape)):
                raise CheckpointError(f"shape mismatch for {key} in {path}")
            params[key] = arr.reshape(shape)
        ck = cls(
            kind=doc["kind"],
            arch=doc["arch"],
            params=params,
            train_config=doc["train_config"],
            seed=doc["seed"],
            loss_curve=list(doc["loss_curve"]),
            metadata=doc.get("metadata", {}),
        )
        ck.hash = hashlib.sha256(_canonical(doc).encode()).hexdigest()
        return ck

    # ------------------------------------------------------------------
    # model reconstruction helpers

    def _sub_params(self, prefix: str) -> dict:
        out = {k[len(prefix):]: v for k, v in self.params.items() if k.startswith(prefix)}
        if not out:
            raise CheckpointError(f"no parameters with prefix {prefix!r}")
        return out

    def autoencoder(self) -> tuple[Encoder, dict, Decoder, dict]:
        if self.kind != "autoencoder":
            raise CheckpointError(f"not an autoencoder checkpoint: {self.kind}")
        enc = Encoder(EncoderArch.from_dict(self.arch["encoder"]))
        dec = Decoder(DecoderArch.from_dict(self.arch["decoder"]))
        return enc, self._sub_params("enc."), dec, self._sub_params("dec.")

    def segmenter(self) -> tuple[Segmenter, dict]:
        if self.kind != "segmenter":
            raise CheckpointError(f"not a segmenter checkpoint: {self.kind}")
        return Segmenter(SegmenterArch.from_dict(self.arch["segmenter"])), dict(self.params)

    def classifier(self) -> tuple[BinaryClassifier, dict]:
        if self.kind != "classifier":
            raise CheckpointError(f"not a classifier checkpoint: {self.kind}")
        return BinaryClassifier(ClassifierArch.from_dict(self.arch["classifier"])), dict(self.params)


def make_autoencoder_checkpoint(enc_params: dict, dec_params: dict,
                                enc_arch: EncoderArch, dec_arch: DecoderArch,
                                train_config: dict, seed: int,
                                loss_curve: list[float],
                                metadata: dict | None = None) -> Checkpoint:
    params = {f"enc.{k}": v for k, v in enc_params.items()}
    params.update({f"dec.{k}": v for k, v in dec_params.items()})
    return Checkpoint(
        kind="autoencoder",
        arch={"encoder": enc_arch.to_dict(), "decoder": dec_arch.to_dict()},
        params=params,
        train_config=train_config,
        seed=seed,
        loss_curve=loss_curve,
        metadata=metadata or {},
    )
