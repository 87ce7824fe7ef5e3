"""Byte-reproducible model checkpoints: a zip of ``meta.json`` plus one ``.npy`` per parameter."""
from __future__ import annotations

import hashlib
import io
import json
import zipfile
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .encoder import ContextualVectors, Vocabulary
from .network import EncoderConfig
from .sense import SenseModel
from .tagger import TaggerModel

FORMAT_VERSION = 1
_EPOCH = (1980, 1, 1, 0, 0, 0)

Model = Union[TaggerModel, SenseModel]


class CheckpointError(ValueError):
    pass


def _entry(zf: zipfile.ZipFile, name: str, data: bytes) -> None:
    info = zipfile.ZipInfo(name, date_time=_EPOCH)
    info.compress_type = zipfile.ZIP_DEFLATED
    info.external_attr = 0o644 << 16
    zf.writestr(info, data)


def save_checkpoint(path, model: Model) -> str:
    """Write ``model`` to ``path``; returns the SHA-256 of the file."""
    meta = {
        "format": FORMAT_VERSION,
        "kind": model.kind,
        "encoder": model.encoder.to_dict(),
        "vocab": model.vocab.to_dict(),
        "parse_vocab": model.parse_vocab.to_dict() if model.parse_vocab else None,
        "params": sorted(model.params),
    }
    if isinstance(model, TaggerModel):
        meta["constrained_training"] = model.constrained_training
    else:
        meta["class_weights"] = None if model.class_weights is None else model.class_weights.tolist()
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as zf:
        _entry(zf, "meta.json", json.dumps(meta, sort_keys=True, indent=1).encode())
        for name in sorted(model.params):
            arr = io.BytesIO()
            np.save(arr, np.ascontiguousarray(model.params[name]), allow_pickle=False)
            _entry(zf, f"params/{name}.npy", arr.getvalue())
    data = buf.getvalue()
    Path(path).write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def load_checkpoint(path, contextual: Optional[ContextualVectors] = None) -> Model:
    try:
        zf = zipfile.ZipFile(path)
    except (OSError, zipfile.BadZipFile) as exc:
        raise CheckpointError(f"{path}: not a readable checkpoint ({exc})") from exc
    with zf:
        meta = json.loads(zf.read("meta.json"))
        if meta.get("format") != FORMAT_VERSION:
            raise CheckpointError(f"{path}: unsupported checkpoint format {meta.get('format')}")
        params = {n: np.load(io.BytesIO(zf.read(f"params/{n}.npy")), allow_pickle=False) for n in meta["params"]}
    enc = EncoderConfig(**meta["encoder"])
    vocab = Vocabulary.from_dict(meta["vocab"])
    pv = Vocabulary.from_dict(meta["parse_vocab"]) if meta["parse_vocab"] else None
    if meta["kind"] == "tagger":
        return TaggerModel(enc, vocab, pv, params, meta["constrained_training"], contextual)
    if meta["kind"] == "sense":
        cw = meta["class_weights"]
        return SenseModel(enc, vocab, pv, params, None if cw is None else np.array(cw), contextual)
    raise CheckpointError(f"{path}: unknown model kind {meta['kind']!r}")


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
