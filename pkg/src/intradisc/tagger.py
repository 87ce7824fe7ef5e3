"""Argument identification: BiLSTM(+parse) encoder, linear emission layer, BIO-constrained CRF."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import crf
from .corpus.trees import linearize_parse
from .corpus.types import LABELS, NUM_LABELS, ROLES, AnnotatedSentence, D1Example, is_bio_valid
from .encoder import (
    PAD,
    SPECIALS,
    ContextualVectors,
    EncoderConfigError,
    Params,
    Vocabulary,
    build_vocab,
    load_pretrained_vectors,
    pad_ids,
)
from .network import EncoderConfig, EncoderInputs, encode, encode_backward, init_encoder
from .training import EpochRecord, TrainConfig, fit

BIO_MASK = crf.bio_mask()


@dataclass(frozen=True, order=True)
class ArgumentSpan:
    start: int
    end: int
    role: str

    def __post_init__(self):
        if self.role not in ROLES or not 0 <= self.start < self.end:
            raise ValueError(f"invalid argument span {self}")

    def __len__(self) -> int:
        return self.end - self.start


def extract_spans(tags: Sequence[str]) -> List[ArgumentSpan]:
    """Every maximal ``B-X (I-X)*`` run as one span, left to right."""
    if not is_bio_valid(tags):
        raise ValueError(f"tag sequence is not BIO-valid: {list(tags)}")
    spans = []
    start = role = None
    for j, tag in enumerate(list(tags) + ["O"]):
        if tag.startswith("I-"):
            continue
        if role is not None:
            spans.append(ArgumentSpan(start, j, role))
            role = None
        if tag.startswith("B-"):
            start, role = j, tag[2:]
    return spans


def spans_to_tags(n: int, spans: Sequence[ArgumentSpan]) -> Tuple[str, ...]:
    tags = ["O"] * n
    for sp in spans:
        tags[sp.start] = "B-" + sp.role
        for j in range(sp.start + 1, sp.end):
            tags[j] = "I-" + sp.role
    return tuple(tags)


@lru_cache(maxsize=65536)
def _linearized(parse: str, mode: str) -> Tuple[str, ...]:
    return tuple(linearize_parse(parse, mode))


def parse_vocab_for(parses: Sequence[str], mode: str) -> Vocabulary:
    return build_vocab((t for p in parses if p for t in _linearized(p, mode)), cap=10**9)


def parse_inputs(cfg: EncoderConfig, parse_vocab: Vocabulary, parses: Sequence[str]):
    seqs = []
    for p in parses:
        if not p:
            raise EncoderConfigError("model uses parse features but a sentence has no parse")
        seqs.append(parse_vocab.ids(_linearized(p, cfg.parse_mode)))
    return pad_ids(seqs, parse_vocab.pad_id)


@dataclass
class TaggerModel:
    encoder: EncoderConfig
    vocab: Vocabulary
    parse_vocab: Optional[Vocabulary]
    params: Params
    constrained_training: bool = False
    contextual: Optional[ContextualVectors] = None

    kind = "tagger"

    @property
    def crf_params(self) -> crf.CrfParams:
        p = self.params
        return crf.CrfParams(p["crf.trans"], p["crf.start"], p["crf.end"])

    @property
    def trainable_keys(self) -> List[str]:
        frozen = {"embed"} if self.encoder.freeze_embeddings else set()
        return [k for k in self.params if k not in frozen]

    def inputs(self, sentences: Sequence[AnnotatedSentence]) -> EncoderInputs:
        if self.encoder.mode == "contextual":
            if self.contextual is None:
                raise EncoderConfigError("contextual-mode model has no contextual vectors attached")
            vecs = [self.contextual.for_sentence(s) for s in sentences]
            ids, lengths = pad_ids([np.full(len(v), -1) for v in vecs], -1)
            vectors = np.zeros(ids.shape + (self.contextual.dim,))
            for b, v in enumerate(vecs):
                vectors[b, : len(v)] = v
        else:
            ids, lengths = pad_ids([self.vocab.ids(s.tokens) for s in sentences], self.vocab.pad_id)
            vectors = None
        inp = EncoderInputs(ids, lengths, vectors)
        if self.encoder.use_parse:
            inp.parse_ids, inp.parse_lengths = parse_inputs(self.encoder, self.parse_vocab, [s.parse for s in sentences])
        return inp

    def emissions(self, inp: EncoderInputs):
        F, cache = encode(self.params, self.encoder, inp)
        em = F @ self.params["proj.W"] + self.params["proj.b"]
        return em, (F, cache)

    def loss_and_grads(self, examples: Sequence[D1Example]):
        """Mean per-sentence CRF negative log-likelihood and its gradients."""
        inp = self.inputs([ex.sentence for ex in examples])
        em, (F, cache) = self.emissions(inp)
        crfp = self.crf_params
        mask = BIO_MASK if self.constrained_training else None
        B = len(examples)
        d_em = np.zeros_like(em)
        g_trans = np.zeros_like(crfp.transitions)
        g_start = np.zeros_like(crfp.start)
        g_end = np.zeros_like(crfp.end)
        total = 0.0
        for b, ex in enumerate(examples):
            n = int(inp.lengths[b])
            loss, g = crf.nll(crfp, em[b, :n], ex.tags, mask)
            total += loss
            d_em[b, :n] = g.emissions / B
            g_trans += g.transitions / B
            g_start += g.start / B
            g_end += g.end / B
        W = self.params["proj.W"]
        grads = encode_backward(self.params, self.encoder, inp, d_em @ W.T, cache)
        grads["proj.W"] = F.reshape(-1, F.shape[-1]).T @ d_em.reshape(-1, NUM_LABELS)
        grads["proj.b"] = d_em.sum(axis=(0, 1))
        grads["crf.trans"], grads["crf.start"], grads["crf.end"] = g_trans, g_start, g_end
        return total / B, grads

    def loss(self, examples: Sequence[D1Example], batch_size: int = 64) -> float:
        mask = BIO_MASK if self.constrained_training else None
        total = 0.0
        for i in range(0, len(examples), batch_size):
            chunk = examples[i : i + batch_size]
            inp = self.inputs([ex.sentence for ex in chunk])
            em, _ = self.emissions(inp)
            for b, ex in enumerate(chunk):
                n = int(inp.lengths[b])
                total += crf.log_partition(self.crf_params, em[b, :n], mask) - crf.score_sequence(
                    self.crf_params, em[b, :n], ex.tags
                )
        return total / len(examples)

    def predict(self, sentences: Sequence[AnnotatedSentence], batch_size: int = 64) -> List[Tuple[str, ...]]:
        out = []
        for i in range(0, len(sentences), batch_size):
            chunk = sentences[i : i + batch_size]
            inp = self.inputs(chunk)
            em, _ = self.emissions(inp)
            for b in range(len(chunk)):
                out.append(crf.decode_labels(self.crf_params, em[b, : inp.lengths[b]], BIO_MASK))
        return out

    def config_echo(self) -> dict:
        return {"encoder": self.encoder.to_dict(), "constrained_training": self.constrained_training}


def init_tagger(
    encoder_cfg: EncoderConfig,
    vocab: Vocabulary,
    parse_vocab: Optional[Vocabulary],
    seed: int = 0,
    input_dim: Optional[int] = None,
    constrained_training: bool = False,
) -> TaggerModel:
    encoder_cfg.validate()
    rng = np.random.default_rng(seed)
    dim = input_dim or encoder_cfg.emb_dim
    params = init_encoder(encoder_cfg, len(vocab), dim, len(parse_vocab) if parse_vocab else 0, rng)
    width = encoder_cfg.output_dim
    bound = 1.0 / np.sqrt(width)
    dt = encoder_cfg.np_dtype
    params["proj.W"] = rng.uniform(-bound, bound, (width, NUM_LABELS)).astype(dt)
    params["proj.b"] = np.zeros(NUM_LABELS, dt)
    zeros = crf.CrfParams.zeros(NUM_LABELS, dt)
    params["crf.trans"], params["crf.start"], params["crf.end"] = zeros.transitions, zeros.start, zeros.end
    return TaggerModel(encoder_cfg, vocab, parse_vocab, params, constrained_training)


def train_tagger(
    train: Sequence[D1Example],
    dev: Sequence[D1Example],
    encoder_cfg: EncoderConfig = EncoderConfig(),
    train_cfg: TrainConfig = TrainConfig(),
    contextual: Optional[ContextualVectors] = None,
    constrained_training: bool = False,
    on_epoch: Optional[Callable[[EpochRecord], None]] = None,
) -> Tuple[TaggerModel, List[EpochRecord]]:
    """Fit a tagger on D1 examples, early-stopping on dev loss; returns the best-dev model."""
    encoder_cfg.validate()
    train_cfg.validate()
    if not train or not dev:
        raise ValueError("train and dev sets must be non-empty")
    if encoder_cfg.mode == "contextual":
        if contextual is None:
            raise EncoderConfigError("contextual mode needs loaded contextual vectors")
        vocab = Vocabulary(list(SPECIALS), len(SPECIALS))
        input_dim = contextual.dim
    else:
        vocab = build_vocab((t for ex in train for t in ex.sentence.tokens), encoder_cfg.vocab_cap)
        input_dim = encoder_cfg.emb_dim
    parse_vocab = parse_vocab_for([ex.sentence.parse for ex in train], encoder_cfg.parse_mode) if encoder_cfg.use_parse else None
    model = init_tagger(encoder_cfg, vocab, parse_vocab, train_cfg.seed, input_dim, constrained_training)
    model.contextual = contextual
    if encoder_cfg.mode == "pretrained":
        table = load_pretrained_vectors(encoder_cfg.pretrained_path, vocab, encoder_cfg.emb_dim, train_cfg.seed)
        model.params["embed"] = table.weights.astype(encoder_cfg.np_dtype)
    model.params["embed"][vocab.stoi[PAD]] = 0.0
    best, records = fit(
        model.params,
        model.trainable_keys,
        model.loss_and_grads,
        model.loss,
        list(train),
        list(dev),
        train_cfg,
        train_cfg.lr_for(encoder_cfg.mode),
        on_epoch,
    )
    model.params = best
    return model, records


def tag(model: TaggerModel, sentence: AnnotatedSentence) -> Tuple[str, ...]:
    return model.predict([sentence])[0]


def token_accuracy(model: TaggerModel, examples: Sequence[D1Example]) -> float:
    pred = model.predict([ex.sentence for ex in examples])
    hit = sum(p == g for ps, ex in zip(pred, examples) for p, g in zip(ps, ex.tags))
    return hit / sum(len(ex.tags) for ex in examples)


__all__ = [
    "ArgumentSpan",
    "TaggerModel",
    "LABELS",
    "extract_spans",
    "init_tagger",
    "spans_to_tags",
    "tag",
    "token_accuracy",
    "train_tagger",
]
