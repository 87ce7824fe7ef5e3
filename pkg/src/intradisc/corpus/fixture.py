"""Synthetic corpora with planted, learnable intra-sentential relations.

Each relation clause looks like ``<arg1 words> , <sense marker> <arg2 words>``
(or the Arg2-first mirror image).  Argument words come from a content
vocabulary ``w*``, material outside arguments from a filler vocabulary ``f*``,
and the first Arg2 token is a marker ``m<k>`` that fully determines the sense.
Linked relations carry an explicit connective ``because`` and discontinuous
Arg1s are interrupted by a ``-- ... --`` parenthetical, so models can learn
that both yield all-O tags under the default dataset options.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .datasets import D1Options, eligible_relations
from .reference import SENSE_COUNTS
from .trees import right_branching_tree
from .types import SENSE_INDEX, AnnotatedSentence, GoldRelation, SenseLabel

DEFAULT_SENSES = (
    SenseLabel.CONTINGENCY_CAUSE,
    SenseLabel.CONTINGENCY_PURPOSE,
    SenseLabel.EXPANSION_CONJUNCTION,
    SenseLabel.EXPANSION_LEVEL_OF_DETAIL,
    SenseLabel.CONTINGENCY_CONDITION,
)

CONNECTIVE = "because"
_POS = {",": ",", ";": ":", ".": ".", "--": ":", CONNECTIVE: "IN"}


def marker_token(sense: SenseLabel) -> str:
    return f"m{SENSE_INDEX[sense]}"


def _pos(tok: str) -> str:
    if tok in _POS:
        return _POS[tok]
    return {"w": "NN", "f": "DT", "m": "VBG"}[tok[0]]


@dataclass(frozen=True)
class FixtureParams:
    n_sentences: int = 200
    vocab_size: int = 60
    relation_rate: float = 0.6
    multi_relation_rate: float = 0.05
    altlex_rate: float = 0.1
    linked_rate: float = 0.05
    discontinuous_rate: float = 0.03
    arg2_first_rate: float = 0.1
    senses: Tuple[SenseLabel, ...] = DEFAULT_SENSES

    def validate(self) -> None:
        if self.n_sentences < 1 or self.vocab_size < 2:
            raise ValueError("n_sentences and vocab_size must be positive (vocab_size >= 2)")
        for name in ("relation_rate", "multi_relation_rate", "altlex_rate", "linked_rate",
                     "discontinuous_rate", "arg2_first_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if not self.senses:
            raise ValueError("senses must be non-empty")


@dataclass
class FixtureLedger:
    """Exact counts of what was planted, for test oracles."""

    n_sentences: int = 0
    relations_total: int = 0
    linked: int = 0
    altlex: int = 0
    discontinuous: int = 0
    arg2_first: int = 0
    multi_relation_sentences: int = 0
    relations_per_sentence: List[int] = field(default_factory=list)
    eligible_per_sentence: List[int] = field(default_factory=list)

    @property
    def eligible(self) -> int:
        """Relations kept by the default dataset options (not linked, continuous)."""
        return self.relations_total - self.linked - self.discontinuous

    @property
    def d1_examples(self) -> int:
        zero = sum(1 for k in self.eligible_per_sentence if k == 0)
        return zero + self.eligible


@dataclass
class Fixture:
    sentences: List[AnnotatedSentence]
    ledger: FixtureLedger


class _Builder:
    def __init__(self):
        self.tokens: List[str] = []

    def add(self, toks) -> Tuple[int, int]:
        start = len(self.tokens)
        self.tokens.extend(toks)
        return (start, len(self.tokens))


def generate_fixture(seed: int = 0, params: FixtureParams = FixtureParams()) -> Fixture:
    params.validate()
    rng = np.random.default_rng(seed)
    content = [f"w{i}" for i in range(params.vocab_size)]
    filler = [f"f{i}" for i in range(max(2, params.vocab_size // 6))]
    weights = np.array([SENSE_COUNTS[s] for s in params.senses], dtype=float)
    weights /= weights.sum()

    def words(pool, lo, hi):
        return [pool[i] for i in rng.integers(0, len(pool), size=int(rng.integers(lo, hi + 1)))]

    def sense():
        return params.senses[int(rng.choice(len(params.senses), p=weights))]

    multi_rate = min(params.multi_relation_rate, params.relation_rate)
    ledger = FixtureLedger()
    sentences = []
    for idx in range(params.n_sentences):
        u = rng.random()
        k = 0 if u >= params.relation_rate else (1 if u >= multi_rate else int(rng.integers(2, 4)))
        b = _Builder()
        rels: List[GoldRelation] = []
        b.add(words(filler, 0, 2))
        if k == 0:
            b.add(words(content + filler, 4, 10))
        elif k == 1:
            s = sense()
            style = rng.random()
            linked = style < params.linked_rate
            discont = not linked and style < params.linked_rate + params.discontinuous_rate
            arg2_first = not (linked or discont) and rng.random() < params.arg2_first_rate
            if arg2_first:
                a2 = b.add([marker_token(s)] + words(content, 1, 4))
                b.add([","])
                a1 = (b.add(words(content, 2, 5)),)
            elif discont:
                left = b.add(words(content, 1, 3))
                b.add(["--"] + words(filler, 1, 2) + ["--"])
                right = b.add(words(content, 1, 3))
                a1 = (left, right)
                b.add([","])
                a2 = b.add([marker_token(s)] + words(content, 1, 4))
            else:
                a1 = (b.add(words(content, 2, 5)),)
                b.add([",", CONNECTIVE] if linked else [","])
                a2 = b.add([marker_token(s)] + words(content, 1, 4))
            rels.append(_relation(rng, params, a1, (a2,), s, linked))
            ledger.linked += linked
            ledger.discontinuous += discont
            ledger.arg2_first += arg2_first
        else:
            for c in range(k):
                if c:
                    b.add([";"])
                s = sense()
                a1 = b.add(words(content, 2, 4))
                b.add([","])
                a2 = b.add([marker_token(s)] + words(content, 1, 3))
                rels.append(_relation(rng, params, (a1,), (a2,), s, False))
            ledger.multi_relation_sentences += 1
        b.add(words(filler, 0, 2) + ["."])
        toks = tuple(b.tokens)
        sent = AnnotatedSentence(
            doc_id=f"fx{idx // 10:04d}",
            sent_index=idx % 10,
            tokens=toks,
            parse=right_branching_tree(toks, [_pos(t) for t in toks]),
            relations=tuple(rels),
        )
        sentences.append(sent)
        ledger.relations_total += len(rels)
        ledger.altlex += sum(r.provenance == "AltLex" for r in rels)
        ledger.relations_per_sentence.append(len(rels))
        ledger.eligible_per_sentence.append(len(eligible_relations(sent, D1Options())))
    ledger.n_sentences = len(sentences)
    return Fixture(sentences, ledger)


def _relation(rng, params, a1, a2, sense, linked) -> GoldRelation:
    altlex = not linked and rng.random() < params.altlex_rate
    return GoldRelation(
        arg1_spans=tuple(a1),
        arg2_spans=tuple(a2),
        sense=sense,
        provenance="AltLex" if altlex else "Implicit",
        linked_to_explicit=linked,
    )
