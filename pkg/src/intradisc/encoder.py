"""Token encoders: vocabularies, embeddings, a numpy BiLSTM with exact gradients,
the parse-tree encoder, feature fusion and precomputed contextual vectors.

Sequences in a batch are right-padded. The backward LSTM reads each sequence
reversed *within its own length*, so padding always trails real tokens in both
directions and never influences them; padded outputs only need masking in the
loss.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

PAD, UNK, CLS, SEP = "<pad>", "<unk>", "[CLS]", "[SEP]"
SPECIALS = (PAD, UNK, CLS, SEP)

Params = Dict[str, np.ndarray]


class EncoderConfigError(ValueError):
    pass


class VectorFormatError(ValueError):
    pass


class ContextualLookupError(KeyError):
    pass


# ---------------------------------------------------------------- vocabulary


@dataclass
class Vocabulary:
    itos: List[str]
    n_specials: int = 2
    stoi: Dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.stoi = {t: i for i, t in enumerate(self.itos)}
        if len(self.stoi) != len(self.itos):
            raise ValueError("duplicate vocabulary entries")

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, token: str) -> bool:
        return token in self.stoi

    @property
    def pad_id(self) -> int:
        return self.stoi[PAD]

    @property
    def unk_id(self) -> int:
        return self.stoi[UNK]

    def id(self, token: str) -> int:
        return self.stoi.get(token, self.stoi[UNK])

    def ids(self, tokens: Iterable[str]) -> np.ndarray:
        unk = self.stoi[UNK]
        return np.array([self.stoi.get(t, unk) for t in tokens], dtype=np.int64)

    def to_dict(self) -> dict:
        return {"itos": list(self.itos), "n_specials": self.n_specials}

    @classmethod
    def from_dict(cls, d: dict) -> "Vocabulary":
        return cls(list(d["itos"]), int(d["n_specials"]))


def build_vocab(tokens: Iterable[str], cap: int = 50000, specials: Sequence[str] = (PAD, UNK)) -> Vocabulary:
    """Reserved ids first, then the ``cap`` most frequent tokens (ties lexicographic)."""
    counts = Counter(t for t in tokens if t not in specials)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:cap]
    return Vocabulary(list(specials) + [t for t, _ in ranked], len(specials))


# ---------------------------------------------------------------- embeddings


@dataclass
class EmbeddingTable:
    weights: np.ndarray
    trainable: bool = True


def init_embeddings(n_rows: int, dim: int, rng: np.random.Generator, dtype=np.float64) -> np.ndarray:
    return rng.uniform(-0.05, 0.05, size=(n_rows, dim)).astype(dtype)


def load_pretrained_vectors(path, vocab: Vocabulary, dim: int = 100, seed: int = 0, trainable: bool = True) -> EmbeddingTable:
    """Embedding table whose rows come from a ``token v1 ... vd`` text file where available.

    Rows for tokens missing from the file keep a seeded uniform(-0.05, 0.05) init.
    """
    table = init_embeddings(len(vocab), dim, np.random.default_rng(seed))
    width = None
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            parts = line.rstrip().split(" ")
            if len(parts) < 2:
                continue
            if width is None:
                width = len(parts) - 1
                if width != dim:
                    raise VectorFormatError(f"{path}: vectors have width {width}, configured {dim}")
            elif len(parts) - 1 != width:
                raise VectorFormatError(f"{path}:{lineno}: expected {width} values, got {len(parts) - 1}")
            tok = parts[0]
            if tok in vocab.stoi:
                try:
                    table[vocab.stoi[tok]] = np.array(parts[1:], dtype=np.float64)
                except ValueError:
                    raise VectorFormatError(f"{path}:{lineno}: non-numeric vector entry") from None
    return EmbeddingTable(table, trainable)


# ---------------------------------------------------------------- LSTM


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def init_lstm(params: Params, prefix: str, input_dim: int, hidden: int, rng, dtype=np.float64) -> None:
    bound = 1.0 / np.sqrt(hidden)
    params[prefix + ".Wx"] = rng.uniform(-bound, bound, (input_dim, 4 * hidden)).astype(dtype)
    params[prefix + ".Wh"] = rng.uniform(-bound, bound, (hidden, 4 * hidden)).astype(dtype)
    b = np.zeros(4 * hidden, dtype)
    b[hidden : 2 * hidden] = 1.0  # forget gate
    params[prefix + ".b"] = b


def lstm_forward(Wx, Wh, b, X):
    """Unidirectional LSTM over ``X`` of shape (B, T, D) from zero states; gates [i, f, g, o]."""
    B, T, _ = X.shape
    H = Wh.shape[0]
    h = np.zeros((B, H), X.dtype)
    c = np.zeros((B, H), X.dtype)
    hs = np.empty((B, T, H), X.dtype)
    steps = []
    xz = X @ Wx + b
    for t in range(T):
        z = xz[:, t] + h @ Wh
        i = _sigmoid(z[:, :H])
        f = _sigmoid(z[:, H : 2 * H])
        g = np.tanh(z[:, 2 * H : 3 * H])
        o = _sigmoid(z[:, 3 * H :])
        c_prev, h_prev = c, h
        c = f * c_prev + i * g
        tc = np.tanh(c)
        h = o * tc
        hs[:, t] = h
        steps.append((i, f, g, o, c_prev, h_prev, tc))
    return hs, (X, Wx, Wh, steps)


def lstm_backward(dH, cache):
    X, Wx, Wh, steps = cache
    B, T, _ = X.shape
    H = Wh.shape[0]
    dWh = np.zeros_like(Wh)
    dz_all = np.empty((B, T, 4 * H), X.dtype)
    dh_next = np.zeros((B, H), X.dtype)
    dc_next = np.zeros((B, H), X.dtype)
    for t in range(T - 1, -1, -1):
        i, f, g, o, c_prev, h_prev, tc = steps[t]
        dh = dH[:, t] + dh_next
        dc = dc_next + dh * o * (1.0 - tc * tc)
        dz = dz_all[:, t]
        dz[:, :H] = dc * g * i * (1.0 - i)
        dz[:, H : 2 * H] = dc * c_prev * f * (1.0 - f)
        dz[:, 2 * H : 3 * H] = dc * i * (1.0 - g * g)
        dz[:, 3 * H :] = dh * tc * o * (1.0 - o)
        dWh += h_prev.T @ dz
        dh_next = dz @ Wh.T
        dc_next = dc * f
    dz2 = dz_all.reshape(B * T, 4 * H)
    dWx = X.reshape(B * T, -1).T @ dz2
    db = dz2.sum(axis=0)
    dX = dz_all @ Wx.T
    return dX, dWx, dWh, db


def _reverse_index(lengths: np.ndarray, T: int) -> np.ndarray:
    t = np.arange(T)[None, :]
    lens = lengths[:, None]
    return np.where(t < lens, lens - 1 - t, t)


def _gather(A, idx):
    return np.take_along_axis(A, idx[:, :, None], axis=1)


def bilstm_forward(params: Params, prefix: str, X: np.ndarray, lengths: np.ndarray):
    """Concatenated forward/backward hidden states, shape (B, T, 2H)."""
    rev = _reverse_index(lengths, X.shape[1])
    hf, cf = lstm_forward(params[prefix + ".fwd.Wx"], params[prefix + ".fwd.Wh"], params[prefix + ".fwd.b"], X)
    hb_rev, cb = lstm_forward(
        params[prefix + ".bwd.Wx"], params[prefix + ".bwd.Wh"], params[prefix + ".bwd.b"], _gather(X, rev)
    )
    return np.concatenate([hf, _gather(hb_rev, rev)], axis=-1), (cf, cb, rev)


def bilstm_backward(prefix: str, dH: np.ndarray, cache) -> Tuple[Params, np.ndarray]:
    cf, cb, rev = cache
    H = dH.shape[-1] // 2
    grads: Params = {}
    dXf, grads[prefix + ".fwd.Wx"], grads[prefix + ".fwd.Wh"], grads[prefix + ".fwd.b"] = lstm_backward(
        dH[..., :H], cf
    )
    dXb_rev, grads[prefix + ".bwd.Wx"], grads[prefix + ".bwd.Wh"], grads[prefix + ".bwd.b"] = lstm_backward(
        _gather(dH[..., H:], rev), cb
    )
    return grads, dXf + _gather(dXb_rev, rev)


def length_mask(lengths: np.ndarray, T: int) -> np.ndarray:
    return np.arange(T)[None, :] < lengths[:, None]


def pad_ids(seqs: Sequence[np.ndarray], pad: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    lengths = np.array([len(s) for s in seqs], dtype=np.int64)
    out = np.full((len(seqs), int(lengths.max())), pad, dtype=np.int64)
    for b, s in enumerate(seqs):
        out[b, : len(s)] = s
    return out, lengths


# ---------------------------------------------------------------- single-sequence API


def bilstm_encode(params: Params, token_ids: Sequence[int], prefix: str = "enc", embed_key: str = "embed"):
    """Embed one id sequence and run the BiLSTM; returns ``(H, cache)`` with H of shape (n, 2H)."""
    ids = np.asarray(token_ids, dtype=np.int64)[None, :]
    lengths = np.array([ids.shape[1]])
    X = params[embed_key][ids]
    H, cache = bilstm_forward(params, prefix, X, lengths)
    return H[0], (ids, cache, prefix, embed_key)


def bilstm_encode_backward(params: Params, output_gradients: np.ndarray, cache) -> Params:
    """Gradients of a scalar loss w.r.t. the BiLSTM weights and the embedding table."""
    ids, lstm_cache, prefix, embed_key = cache
    grads, dX = bilstm_backward(prefix, np.asarray(output_gradients)[None], lstm_cache)
    dE = np.zeros_like(params[embed_key])
    np.add.at(dE, ids.ravel(), dX.reshape(-1, dX.shape[-1]))
    grads[embed_key] = dE
    return grads


def final_states(H: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """[last forward state ; last backward state] for each sequence, shape (B, 2H)."""
    half = H.shape[-1] // 2
    b = np.arange(len(lengths))
    return np.concatenate([H[b, lengths - 1, :half], H[b, 0, half:]], axis=-1)


def final_states_backward(dS: np.ndarray, lengths: np.ndarray, shape) -> np.ndarray:
    half = shape[-1] // 2
    dH = np.zeros(shape, dS.dtype)
    b = np.arange(len(lengths))
    dH[b, lengths - 1, :half] += dS[:, :half]
    dH[b, 0, half:] += dS[:, half:]
    return dH


def encode_parse(params: Params, linearized_ids: Sequence[int], prefix: str = "parse") -> np.ndarray:
    """Fixed-width summary of one linearized parse."""
    if len(linearized_ids) == 0:
        raise EncoderConfigError("parse features enabled but the linearized parse is empty")
    H, _ = bilstm_encode(params, linearized_ids, prefix=prefix, embed_key=prefix + "_embed")
    return final_states(H[None], np.array([len(linearized_ids)]))[0]


def fuse_features(token_encodings: np.ndarray, parse_vector: Optional[np.ndarray]) -> np.ndarray:
    """Append the parse vector to every token encoding (batched or single sequence)."""
    if parse_vector is None or parse_vector.shape[-1] == 0:
        return token_encodings
    if token_encodings.ndim == 2:
        if parse_vector.ndim != 1:
            raise ValueError("single-sequence fusion needs a 1-D parse vector")
        tiled = np.broadcast_to(parse_vector, (token_encodings.shape[0], parse_vector.shape[0]))
    else:
        if parse_vector.ndim != 2 or parse_vector.shape[0] != token_encodings.shape[0]:
            raise ValueError(
                f"parse vectors {parse_vector.shape} do not match token encodings {token_encodings.shape}"
            )
        tiled = np.broadcast_to(
            parse_vector[:, None, :], token_encodings.shape[:2] + (parse_vector.shape[-1],)
        )
    return np.concatenate([token_encodings, tiled], axis=-1)


# ---------------------------------------------------------------- contextual vectors


class ContextualVectors(Mapping):
    """Fixed per-token vectors keyed by ``(doc_id, sent_index)``."""

    def __init__(self, vectors: Dict[Tuple[str, int], np.ndarray]):
        self._vectors = vectors
        dims = {v.shape[1] for v in vectors.values()}
        if len(dims) > 1:
            raise VectorFormatError(f"contextual vectors have mixed widths {sorted(dims)}")
        self.dim = dims.pop() if dims else 0

    def __getitem__(self, key):
        try:
            return self._vectors[key]
        except KeyError:
            raise ContextualLookupError(f"no contextual vectors for sentence {key[0]}/{key[1]}") from None

    def __iter__(self):
        return iter(self._vectors)

    def __len__(self):
        return len(self._vectors)

    def for_sentence(self, sentence) -> np.ndarray:
        vec = self[sentence.key]
        if len(vec) != len(sentence.tokens):
            raise VectorFormatError(
                f"sentence {sentence.doc_id}/{sentence.sent_index}: {len(vec)} vectors for {len(sentence.tokens)} tokens"
            )
        return vec


def save_contextual_vectors(path, vectors: Mapping[Tuple[str, int], np.ndarray]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for (doc_id, sent_index), vec in vectors.items():
            rec = {"doc_id": doc_id, "sent_index": sent_index, "vectors": np.asarray(vec, np.float64).tolist()}
            f.write(json.dumps(rec) + "\n")


def load_contextual_vectors(path, corpus=None) -> ContextualVectors:
    out = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                vec = np.array(rec["vectors"], dtype=np.float64)
                key = (str(rec["doc_id"]), int(rec["sent_index"]))
            except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
                raise VectorFormatError(f"{path}:{lineno}: {exc}") from None
            if vec.ndim != 2:
                raise VectorFormatError(f"{path}:{lineno}: vectors must be a 2-D array")
            out[key] = vec
    vectors = ContextualVectors(out)
    if corpus is not None:
        for sent in corpus:
            vectors.for_sentence(sent)
    return vectors
