"""Level-2 sense classification over ``[CLS] arg1 [SEP] arg2 [SEP]`` sequences."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .corpus.types import NUM_SENSES, SENSE_INDEX, SENSES, D2Example, SenseLabel
from .encoder import (
    CLS,
    PAD,
    SEP,
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
from .tagger import parse_inputs, parse_vocab_for
from .training import EpochRecord, TrainConfig, fit


def build_pair_input(arg1_tokens: Sequence[str], arg2_tokens: Sequence[str]) -> List[str]:
    if not arg1_tokens or not arg2_tokens:
        raise ValueError("both arguments must be non-empty")
    return [CLS, *arg1_tokens, SEP, *arg2_tokens, SEP]


@dataclass(frozen=True)
class SensePair:
    """One classifier query. Token indices are only needed with contextual vectors."""

    arg1_tokens: Tuple[str, ...]
    arg2_tokens: Tuple[str, ...]
    parse: str = ""
    key: Optional[Tuple[str, int]] = None
    arg1_index: Tuple[int, ...] = ()
    arg2_index: Tuple[int, ...] = ()

    @classmethod
    def from_d2(cls, ex: D2Example) -> "SensePair":
        idx1 = tuple(i for s, e in ex.arg1_spans for i in range(s, e))
        idx2 = tuple(i for s, e in ex.arg2_spans for i in range(s, e))
        return cls(ex.arg1_tokens, ex.arg2_tokens, ex.parse, (ex.doc_id, ex.sent_index), idx1, idx2)


@dataclass(frozen=True)
class SenseDistribution:
    probs: np.ndarray

    @property
    def label(self) -> SenseLabel:
        return SENSES[int(np.argmax(self.probs))]

    @property
    def certainty(self) -> float:
        return float(np.max(self.probs))

    def __getitem__(self, sense: SenseLabel) -> float:
        return float(self.probs[SENSE_INDEX[sense]])


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(logits: np.ndarray, targets: np.ndarray, weights: Optional[np.ndarray] = None):
    """Mean (optionally class-weighted) cross-entropy and its gradient w.r.t. the logits."""
    p = softmax(logits)
    B = len(targets)
    w = np.ones(B) if weights is None else weights[targets]
    nll = -np.log(np.maximum(p[np.arange(B), targets], 1e-300))
    loss = float((w * nll).sum() / w.sum())
    d = p.copy()
    d[np.arange(B), targets] -= 1.0
    return loss, d * (w / w.sum())[:, None]


@dataclass
class SenseModel:
    encoder: EncoderConfig
    vocab: Vocabulary
    parse_vocab: Optional[Vocabulary]
    params: Params
    class_weights: Optional[np.ndarray] = None
    contextual: Optional[ContextualVectors] = field(default=None, repr=False)

    kind = "sense"

    @property
    def trainable_keys(self) -> List[str]:
        frozen = {"embed"} if self.encoder.freeze_embeddings and self.encoder.mode != "contextual" else set()
        return [k for k in self.params if k not in frozen]

    def inputs(self, pairs: Sequence[SensePair]) -> EncoderInputs:
        if self.encoder.mode == "contextual":
            if self.contextual is None:
                raise EncoderConfigError("contextual-mode model has no contextual vectors attached")
            ids_list, vec_list = [], []
            cls_id, sep_id = self.vocab.stoi[CLS], self.vocab.stoi[SEP]
            for p in pairs:
                if p.key is None or not p.arg1_index:
                    raise EncoderConfigError("contextual mode needs sentence keys and argument indices")
                sent_vecs = self.contextual[p.key]
                n1, n2 = len(p.arg1_index), len(p.arg2_index)
                ids = np.full(n1 + n2 + 3, -1)
                ids[[0, n1 + 1, n1 + n2 + 2]] = [cls_id, sep_id, sep_id]
                vec = np.zeros((len(ids), self.contextual.dim))
                vec[1 : n1 + 1] = sent_vecs[list(p.arg1_index)]
                vec[n1 + 2 : n1 + n2 + 2] = sent_vecs[list(p.arg2_index)]
                ids_list.append(ids)
                vec_list.append(vec)
            ids, lengths = pad_ids(ids_list, -1)
            vectors = np.zeros(ids.shape + (self.contextual.dim,))
            for b, v in enumerate(vec_list):
                vectors[b, : len(v)] = v
        else:
            seqs = [self.vocab.ids(build_pair_input(p.arg1_tokens, p.arg2_tokens)) for p in pairs]
            ids, lengths = pad_ids(seqs, self.vocab.pad_id)
            vectors = None
        inp = EncoderInputs(ids, lengths, vectors)
        if self.encoder.use_parse:
            inp.parse_ids, inp.parse_lengths = parse_inputs(self.encoder, self.parse_vocab, [p.parse for p in pairs])
        return inp

    def logits(self, inp: EncoderInputs):
        F, cache = encode(self.params, self.encoder, inp)
        pooled = F[:, 0, :]  # [CLS] position, parse summary already appended
        return pooled @ self.params["cls.W"] + self.params["cls.b"], (F, pooled, cache)

    def loss_and_grads(self, examples: Sequence[D2Example]):
        pairs = [SensePair.from_d2(ex) for ex in examples]
        targets = np.array([SENSE_INDEX[ex.sense] for ex in examples])
        inp = self.inputs(pairs)
        z, (F, pooled, cache) = self.logits(inp)
        loss, dz = cross_entropy(z, targets, self.class_weights)
        dF = np.zeros_like(F)
        dF[:, 0, :] = dz @ self.params["cls.W"].T
        grads = encode_backward(self.params, self.encoder, inp, dF, cache)
        grads["cls.W"] = pooled.T @ dz
        grads["cls.b"] = dz.sum(axis=0)
        return loss, grads

    def loss(self, examples: Sequence[D2Example], batch_size: int = 64) -> float:
        total = 0.0
        for i in range(0, len(examples), batch_size):
            chunk = examples[i : i + batch_size]
            z, _ = self.logits(self.inputs([SensePair.from_d2(ex) for ex in chunk]))
            targets = np.array([SENSE_INDEX[ex.sense] for ex in chunk])
            total += cross_entropy(z, targets, self.class_weights)[0] * len(chunk)
        return total / len(examples)

    def predict_proba(self, pairs: Sequence[SensePair], batch_size: int = 64) -> np.ndarray:
        out = []
        for i in range(0, len(pairs), batch_size):
            z, _ = self.logits(self.inputs(pairs[i : i + batch_size]))
            out.append(softmax(z))
        return np.concatenate(out) if out else np.zeros((0, NUM_SENSES))

    def predict(self, examples: Sequence[D2Example]) -> List[SenseLabel]:
        probs = self.predict_proba([SensePair.from_d2(ex) for ex in examples])
        return [SENSES[i] for i in probs.argmax(axis=1)]

    def config_echo(self) -> dict:
        return {"encoder": self.encoder.to_dict(), "class_weighted": self.class_weights is not None}


def init_sense_model(
    encoder_cfg: EncoderConfig,
    vocab: Vocabulary,
    parse_vocab: Optional[Vocabulary],
    seed: int = 0,
    input_dim: Optional[int] = None,
) -> SenseModel:
    encoder_cfg.validate()
    rng = np.random.default_rng(seed)
    dim = input_dim or encoder_cfg.emb_dim
    params = init_encoder(encoder_cfg, len(vocab), dim, len(parse_vocab) if parse_vocab else 0, rng)
    width = encoder_cfg.output_dim
    bound = 1.0 / np.sqrt(width)
    dt = encoder_cfg.np_dtype
    params["cls.W"] = rng.uniform(-bound, bound, (width, NUM_SENSES)).astype(dt)
    params["cls.b"] = np.zeros(NUM_SENSES, dt)
    return SenseModel(encoder_cfg, vocab, parse_vocab, params)


def inverse_frequency_weights(examples: Sequence[D2Example]) -> np.ndarray:
    counts = np.bincount([SENSE_INDEX[ex.sense] for ex in examples], minlength=NUM_SENSES).astype(float)
    w = np.where(counts > 0, counts.sum() / np.maximum(counts, 1) / np.count_nonzero(counts), 1.0)
    return w


SENSE_TRAIN_DEFAULTS = TrainConfig(max_grad_norm=0.5)


def train_sense(
    train: Sequence[D2Example],
    dev: Sequence[D2Example],
    encoder_cfg: EncoderConfig = EncoderConfig(),
    train_cfg: TrainConfig = SENSE_TRAIN_DEFAULTS,
    contextual: Optional[ContextualVectors] = None,
    class_weighted: bool = False,
    on_epoch: Optional[Callable[[EpochRecord], None]] = None,
) -> Tuple[SenseModel, List[EpochRecord]]:
    encoder_cfg.validate()
    train_cfg.validate()
    if not train or not dev:
        raise ValueError("train and dev sets must be non-empty")
    for ex in list(train) + list(dev):
        if not isinstance(ex.sense, SenseLabel):
            SenseLabel.parse(ex.sense)
    if encoder_cfg.mode == "contextual":
        if contextual is None:
            raise EncoderConfigError("contextual mode needs loaded contextual vectors")
        vocab = Vocabulary(list(SPECIALS), len(SPECIALS))
        input_dim = contextual.dim
    else:
        tokens = (t for ex in train for t in (*ex.arg1_tokens, *ex.arg2_tokens))
        vocab = build_vocab(tokens, encoder_cfg.vocab_cap, specials=SPECIALS)
        input_dim = encoder_cfg.emb_dim
    parse_vocab = parse_vocab_for([ex.parse for ex in train], encoder_cfg.parse_mode) if encoder_cfg.use_parse else None
    model = init_sense_model(encoder_cfg, vocab, parse_vocab, train_cfg.seed, input_dim)
    model.contextual = contextual
    if class_weighted:
        model.class_weights = inverse_frequency_weights(train)
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


def classify(model: SenseModel, arg1_tokens, arg2_tokens, parse: str = "", **context) -> SenseDistribution:
    """Sense distribution for one argument pair; ``context`` may carry ``key``/``arg1_index``/``arg2_index``."""
    pair = SensePair(tuple(arg1_tokens), tuple(arg2_tokens), parse, **context)
    return SenseDistribution(model.predict_proba([pair])[0])


def accuracy(model: SenseModel, examples: Sequence[D2Example]) -> float:
    pred = model.predict(examples)
    return sum(p == ex.sense for p, ex in zip(pred, examples)) / len(examples)
