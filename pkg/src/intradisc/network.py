"""Encoder stack shared by the tagger and the sense classifier.

input layer -> BiLSTM -> (optionally) concat parse-tree summary at every position.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .corpus.trees import LINEARIZE_MODES
from .encoder import (
    EncoderConfigError,
    Params,
    bilstm_backward,
    bilstm_forward,
    final_states,
    final_states_backward,
    fuse_features,
    init_embeddings,
    init_lstm,
    length_mask,
)

ENCODER_MODES = ("scratch", "pretrained", "contextual")


@dataclass
class EncoderConfig:
    mode: str = "scratch"
    emb_dim: int = 100
    hidden: int = 256
    vocab_cap: int = 50000
    use_parse: bool = False
    parse_emb_dim: int = 32
    parse_hidden: int = 32
    parse_mode: str = "labels_only"
    freeze_embeddings: bool = False
    pretrained_path: Optional[str] = None
    contextual_path: Optional[str] = None
    dtype: str = "float64"

    def validate(self) -> None:
        if self.mode not in ENCODER_MODES:
            raise EncoderConfigError(f"encoder mode must be one of {ENCODER_MODES}, got {self.mode!r}")
        for name in ("emb_dim", "hidden", "vocab_cap", "parse_emb_dim", "parse_hidden"):
            if getattr(self, name) < 1:
                raise EncoderConfigError(f"{name} must be positive")
        if self.parse_mode not in LINEARIZE_MODES:
            raise EncoderConfigError(f"parse_mode must be one of {LINEARIZE_MODES}")
        if self.mode == "pretrained" and not self.pretrained_path:
            raise EncoderConfigError("pretrained mode needs pretrained_path")
        if self.mode == "contextual" and not self.contextual_path:
            raise EncoderConfigError("contextual mode needs contextual_path")
        if self.dtype not in ("float64", "float32"):
            raise EncoderConfigError("dtype must be float64 or float32")

    @property
    def np_dtype(self):
        return np.dtype(self.dtype)

    @property
    def output_dim(self) -> int:
        return 2 * self.hidden + (2 * self.parse_hidden if self.use_parse else 0)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class EncoderInputs:
    """A padded batch. ``ids`` is -1 wherever a fixed vector from ``vectors`` is used instead."""

    ids: np.ndarray
    lengths: np.ndarray
    vectors: Optional[np.ndarray] = None
    parse_ids: Optional[np.ndarray] = None
    parse_lengths: Optional[np.ndarray] = None


def init_encoder(cfg: EncoderConfig, n_tokens: int, input_dim: int, n_parse: int, rng) -> Params:
    dt = cfg.np_dtype
    params: Params = {"embed": init_embeddings(n_tokens, input_dim, rng, dt)}
    init_lstm(params, "enc.fwd", input_dim, cfg.hidden, rng, dt)
    init_lstm(params, "enc.bwd", input_dim, cfg.hidden, rng, dt)
    if cfg.use_parse:
        params["parse_embed"] = init_embeddings(n_parse, cfg.parse_emb_dim, rng, dt)
        init_lstm(params, "parse.fwd", cfg.parse_emb_dim, cfg.parse_hidden, rng, dt)
        init_lstm(params, "parse.bwd", cfg.parse_emb_dim, cfg.parse_hidden, rng, dt)
    return params


def encode(params: Params, cfg: EncoderConfig, inp: EncoderInputs):
    """Returns features of shape (B, T, cfg.output_dim) and a cache for :func:`encode_backward`."""
    E = params["embed"]
    looked_up = inp.ids >= 0
    X = E[np.where(looked_up, inp.ids, 0)]
    if inp.vectors is not None:
        X = np.where(looked_up[..., None], X, inp.vectors.astype(X.dtype))
    H, lstm_cache = bilstm_forward(params, "enc", X, inp.lengths)
    parse_cache = None
    if cfg.use_parse:
        if inp.parse_ids is None:
            raise EncoderConfigError("model uses parse features but no parse was supplied")
        Xp = params["parse_embed"][inp.parse_ids]
        Hp, p_lstm = bilstm_forward(params, "parse", Xp, inp.parse_lengths)
        pv = final_states(Hp, inp.parse_lengths)
        H = fuse_features(H, pv)
        parse_cache = (p_lstm, Hp.shape)
    return H, (looked_up, lstm_cache, parse_cache)


def encode_backward(params: Params, cfg: EncoderConfig, inp: EncoderInputs, dF: np.ndarray, cache) -> Params:
    looked_up, lstm_cache, parse_cache = cache
    width = 2 * cfg.hidden
    dF = dF * length_mask(inp.lengths, dF.shape[1])[..., None]
    grads, dX = bilstm_backward("enc", dF[..., :width], lstm_cache)
    dE = np.zeros_like(params["embed"])
    np.add.at(dE, inp.ids[looked_up], dX[looked_up])
    grads["embed"] = dE
    if cfg.use_parse:
        p_lstm, hp_shape = parse_cache
        dpv = dF[..., width:].sum(axis=1)
        dHp = final_states_backward(dpv, inp.parse_lengths, hp_shape)
        pgrads, dXp = bilstm_backward("parse", dHp, p_lstm)
        grads.update(pgrads)
        dPE = np.zeros_like(params["parse_embed"])
        pmask = length_mask(inp.parse_lengths, inp.parse_ids.shape[1])
        np.add.at(dPE, inp.parse_ids[pmask], dXp[pmask])
        grads["parse_embed"] = dPE
    return grads
