"""Deterministic single-file checkpoint format.

Layout: 8-byte magic, 8-byte little-endian header length, UTF-8 JSON
header (sorted keys), then every parameter tensor as raw little-endian
float64 in header order. Identical params and config always serialize to
identical bytes, which the run manifests rely on.
"""

import dataclasses
import json
import struct

import numpy as np

from . import decoder as dec
from . import encoder as enc
from .errors import CheckpointError
from .trainer import TrainConfig

MAGIC = b"NBRC0001"


def _tensor_entries(eparams, dparams):
    tensors = eparams.tensors() + dparams.tensors()
    return tensors, [list(t.data.shape) for t in tensors]


def save_checkpoint(path, eparams, dparams, cfg: TrainConfig, feat_dim):
    tensors, shapes = _tensor_entries(eparams, dparams)
    header = {
        "config": dataclasses.asdict(cfg),
        "feat_dim": int(feat_dim),
        "format": 1,
        "shapes": shapes,
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for t in tensors:
            fh.write(np.ascontiguousarray(t.data, dtype="<f8").tobytes())


def load_checkpoint(path):
    """Returns (encoder params, decoder params, config, feat_dim)."""
    with open(path, "rb") as fh:
        if fh.read(8) != MAGIC:
            raise CheckpointError(f"{path}: not a checkpoint file")
        (hlen,) = struct.unpack("<Q", fh.read(8))
        try:
            header = json.loads(fh.read(hlen).decode())
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise CheckpointError(f"{path}: bad header: {e}") from None
        for key in ("config", "feat_dim", "shapes"):
            if key not in header:
                raise CheckpointError(f"{path}: header missing {key!r}")
        try:
            cfg = TrainConfig(**header["config"])
        except TypeError as e:
            raise CheckpointError(f"{path}: bad config block: {e}") from None
        cfg.validate()
        feat_dim = int(header["feat_dim"])

        # rebuild the parameter skeleton, then overwrite tensor data
        rng = np.random.default_rng(0)
        eparams = enc.init_encoder_params(rng, feat_dim, cfg.m, cfg.k, kind=cfg.encoder_kind)
        dparams = dec.init_decoder_params(rng, cfg.m, cfg.k)
        tensors, shapes = _tensor_entries(eparams, dparams)
        if shapes != header["shapes"]:
            raise CheckpointError(f"{path}: tensor shapes do not match config")
        for t, shape in zip(tensors, shapes):
            count = int(np.prod(shape)) if shape else 1
            raw = fh.read(count * 8)
            if len(raw) != count * 8:
                raise CheckpointError(f"{path}: truncated tensor data")
            t.data[...] = np.frombuffer(raw, dtype="<f8").reshape(shape)
        if fh.read(1):
            raise CheckpointError(f"{path}: trailing bytes after tensor data")
    return eparams, dparams, cfg, feat_dim
