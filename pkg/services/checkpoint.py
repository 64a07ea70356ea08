"""Binary checkpoints.

Layout: magic "VIDYN-CKPT1", u32 format version, u32 manifest length,
UTF-8 JSON manifest (sorted keys, compact separators), then the parameter
blob as little-endian f64 in the order of the manifest's layout table.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any
import json
import logging
import struct

import numpy as np

from config.errors import UsageError
from config.run_config import RunConfig
from dyngen import NormStats
from nn import ParameterLayout
from vi_model import DecoderModel, EncoderModel, TrainingResult, VIModel

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"VIDYN-CKPT1"
FORMAT_VERSION = 1
KINDS = ("encoder", "baseline", "vi")


class CheckpointFormatError(OSError):
    """Bad magic, unsupported version or a blob that does not match the layout."""


@dataclass
class Checkpoint:
    kind: str
    layout: ParameterLayout
    params: np.ndarray
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def dims(self) -> dict[str, Any]:
        return self.meta["dims"]

    @property
    def norm_stats(self) -> NormStats:
        return NormStats.from_dict(self.meta["norm_stats"])

    def manifest(self) -> dict[str, Any]:
        return {"kind": self.kind, "layout": self.layout.to_table(), **self.meta}


def _encode_manifest(manifest: dict) -> bytes:
    return json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode("utf-8")


def save_checkpoint(ckpt: Checkpoint, path: str | Path) -> Path:
    if ckpt.kind not in KINDS:
        raise UsageError(f"unknown checkpoint kind {ckpt.kind!r}")
    if ckpt.params.shape != (ckpt.layout.size,):
        raise UsageError(f"parameter blob has {ckpt.params.size} values, layout needs {ckpt.layout.size}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    manifest = _encode_manifest(ckpt.manifest())
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<II", FORMAT_VERSION, len(manifest)))
        f.write(manifest)
        f.write(np.ascontiguousarray(ckpt.params, dtype="<f8").tobytes())
    logger.info(f"Saved {ckpt.kind} checkpoint ({ckpt.layout.size} parameters) to {path}")
    return path


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise UsageError(f"Checkpoint not found: {path}")
    data = path.read_bytes()
    header = len(CHECKPOINT_MAGIC) + 8
    if len(data) < header or data[: len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise CheckpointFormatError(f"{path} is not a checkpoint")
    version, n_manifest = struct.unpack("<II", data[len(CHECKPOINT_MAGIC): header])
    if version != FORMAT_VERSION:
        raise CheckpointFormatError(f"{path}: unsupported checkpoint version {version}")
    try:
        manifest = json.loads(data[header: header + n_manifest].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointFormatError(f"{path}: corrupt manifest ({e})") from e

    layout = ParameterLayout.from_table(manifest.pop("layout"))
    kind = manifest.pop("kind")
    blob = data[header + n_manifest:]
    if len(blob) != 8 * layout.size:
        raise CheckpointFormatError(f"{path}: blob holds {len(blob) // 8} values, layout needs {layout.size}")
    params = np.frombuffer(blob, dtype="<f8").astype(np.float64)
    return Checkpoint(kind=kind, layout=layout, params=params, meta=manifest)


def checkpoint_from_model(
    model: EncoderModel | DecoderModel | VIModel,
    kind: str,
    norm_stats: NormStats,
    config: RunConfig,
    result: TrainingResult | None = None,
    lam: float | None = None,
) -> Checkpoint:
    """Snapshot a trained model with everything needed to rebuild it."""
    if isinstance(model, VIModel):
        enc = model.encoder
        layout = ParameterLayout.concat(enc.layout.prefixed("encoder"), model.layout)
        params = np.concatenate([enc.params, model.theta])
        dims = {
            "obs_dim": model.obs_dim,
            "forcing_dim": model.forcing_dim,
            "n_c": enc.n_c,
            "n_z": model.n_z,
            "width": model.width,
            "depth": model.depth,
            "sigma_z": model.sigma_z,
        }
    else:
        prefix = "encoder" if kind == "encoder" else "decoder"
        layout = model.layout.prefixed(prefix)
        params = model.params.copy()
        dims = {"obs_dim": model.d, "forcing_dim": model.n_x - model.d, "n_c": model.n_c, "n_z": 0}
    meta = {
        "dims": dims,
        "norm_stats": norm_stats.to_dict(),
        "config": config.model_dump(mode="json", by_alias=True),
        "seed": config.train.seed,
        "iteration": None if result is None else result.best_iteration,
        "val_loss": None if result is None else result.best_val,
        "lambda": lam,
    }
    return Checkpoint(kind=kind, layout=layout, params=params, meta=meta)


def model_from_checkpoint(ckpt: Checkpoint) -> EncoderModel | DecoderModel | VIModel:
    dims = ckpt.dims
    d, n_u, n_c = dims["obs_dim"], dims["forcing_dim"], dims["n_c"]
    params = ckpt.params.copy()
    if ckpt.kind == "encoder":
        model = EncoderModel(d + n_u, n_c, d, params)
        expected = model.layout.prefixed("encoder")
    elif ckpt.kind == "baseline":
        model = DecoderModel(d, n_u, 0, n_c, params)
        expected = model.layout.prefixed("decoder")
    elif ckpt.kind == "vi":
        enc_layout = EncoderModel(d + n_u, n_c, d).layout
        encoder = EncoderModel(d + n_u, n_c, d, params[: enc_layout.size])
        model = VIModel(
            encoder,
            n_u,
            dims["n_z"],
            dims["width"],
            dims["depth"],
            dims["sigma_z"],
            theta=params[enc_layout.size:],
        )
        expected = ParameterLayout.concat(enc_layout.prefixed("encoder"), model.layout)
    else:
        raise CheckpointFormatError(f"unknown checkpoint kind {ckpt.kind!r}")
    if expected != ckpt.layout:
        raise CheckpointFormatError(f"{ckpt.kind} checkpoint layout does not match its dims")
    return model
