"""Tag -> spans -> candidate argument pairs -> senses -> one relation per sentence."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .corpus.datasets import D1Options, generate_d2
from .corpus.types import MOST_FREQUENT_SENSE, SENSES, AnnotatedSentence, SenseLabel
from .encoder import EncoderConfigError
from .evaluation import EvalReport, sense_report
from .sense import SenseDistribution, SensePair
from .tagger import ArgumentSpan, extract_spans

MAX_PAIRS = 16


class Note(str, Enum):
    UNIQUE = "unique"
    CHOSEN_BY_LIKELIHOOD = "chosen_by_likelihood"
    SKIPPED_EQUAL_SENSES = "skipped_equal_senses"
    BASELINE_MOST_FREQUENT = "baseline_most_frequent"


STRATEGIES = ("likelihood", "baseline")


@dataclass(frozen=True)
class Candidate:
    arg1: ArgumentSpan
    arg2: ArgumentSpan
    distribution: SenseDistribution

    @property
    def sense(self) -> SenseLabel:
        return self.distribution.label

    @property
    def certainty(self) -> float:
        return self.distribution.certainty


@dataclass(frozen=True)
class ParsedRelation:
    arg1: ArgumentSpan
    arg2: ArgumentSpan
    sense: SenseLabel
    probability: float
    note: Note

    def __post_init__(self):
        if self.arg1.role != "Arg1" or self.arg2.role != "Arg2":
            raise ValueError("arg1/arg2 spans carry the wrong roles")
        if self.arg1.start < self.arg2.end and self.arg2.start < self.arg1.end:
            raise ValueError("arguments overlap")


@dataclass
class SentenceParse:
    sentence: AnnotatedSentence
    tags: Tuple[str, ...]
    candidates: List[Candidate] = field(default_factory=list)
    relation: Optional[ParsedRelation] = None

    def to_dict(self) -> dict:
        def pair(c):
            return {
                "arg1": [c.arg1.start, c.arg1.end],
                "arg2": [c.arg2.start, c.arg2.end],
                "sense": c.sense.value,
                "probability": c.certainty,
            }

        rel = self.relation
        return {
            "doc_id": self.sentence.doc_id,
            "sent_index": self.sentence.sent_index,
            "tokens": list(self.sentence.tokens),
            "tags": list(self.tags),
            "candidates": [pair(c) for c in self.candidates],
            "relation": None
            if rel is None
            else {
                "arg1": [rel.arg1.start, rel.arg1.end],
                "arg2": [rel.arg2.start, rel.arg2.end],
                "sense": rel.sense.value,
                "probability": rel.probability,
            },
            "note": None if rel is None else rel.note.value,
        }


def _pair_key(pair: Tuple[ArgumentSpan, ArgumentSpan]):
    a1, a2 = pair
    return (min(a1.start, a2.start), max(a1.start, a2.start), len(a1) + len(a2), a1.start)


def candidate_pairs(spans: Sequence[ArgumentSpan]) -> List[Tuple[ArgumentSpan, ArgumentSpan]]:
    """All Arg1 x Arg2 combinations, ordered by leftmost start then shortest, capped at ``MAX_PAIRS``."""
    arg1 = [s for s in spans if s.role == "Arg1"]
    arg2 = [s for s in spans if s.role == "Arg2"]
    return sorted(product(arg1, arg2), key=_pair_key)[:MAX_PAIRS]


def disambiguate(candidates: Sequence[Candidate]) -> Tuple[int, Note]:
    """Index of the chosen candidate and why it was chosen."""
    if not candidates:
        raise ValueError("no candidates to choose from")
    if len(candidates) == 1:
        return 0, Note.UNIQUE
    if len({c.sense for c in candidates}) == 1:
        return 0, Note.SKIPPED_EQUAL_SENSES
    certainty = np.array([c.certainty for c in candidates])
    return int(np.argmax(certainty)), Note.CHOSEN_BY_LIKELIHOOD


def most_frequent_baseline(candidates: Sequence[Candidate]) -> Tuple[int, Note]:
    """First candidate predicted as the corpus-majority sense, else the first candidate."""
    if not candidates:
        raise ValueError("no candidates to choose from")
    if len(candidates) == 1:
        return 0, Note.UNIQUE
    for i, c in enumerate(candidates):
        if c.sense == MOST_FREQUENT_SENSE:
            return i, Note.BASELINE_MOST_FREQUENT
    return 0, Note.BASELINE_MOST_FREQUENT


def check_compatible(tagger, sense_model) -> None:
    t, s = getattr(tagger, "encoder", None), getattr(sense_model, "encoder", None)
    if t is not None and s is not None and t.use_parse and s.use_parse and t.parse_mode != s.parse_mode:
        raise EncoderConfigError(f"tagger and sense model linearize parses differently ({t.parse_mode} vs {s.parse_mode})")


def _query(sentence: AnnotatedSentence, a1: ArgumentSpan, a2: ArgumentSpan) -> SensePair:
    idx1 = tuple(range(a1.start, a1.end))
    idx2 = tuple(range(a2.start, a2.end))
    return SensePair(
        tuple(sentence.tokens[i] for i in idx1),
        tuple(sentence.tokens[i] for i in idx2),
        sentence.parse,
        sentence.key,
        idx1,
        idx2,
    )


def parse_batch(tagger, sense_model, sentences: Sequence[AnnotatedSentence], strategy: str = "likelihood") -> List[SentenceParse]:
    """Run the full pipeline over many sentences, batching both models."""
    if strategy not in STRATEGIES:
        raise ValueError(f"strategy must be one of {STRATEGIES}")
    check_compatible(tagger, sense_model)
    tag_seqs = tagger.predict(list(sentences))
    results, queries, owners = [], [], []
    for sent, tags in zip(sentences, tag_seqs):
        res = SentenceParse(sent, tuple(tags))
        for a1, a2 in candidate_pairs(extract_spans(tags)):
            queries.append((a1, a2))
            owners.append(len(results))
        results.append(res)
    if queries:
        probs = sense_model.predict_proba([_query(results[o].sentence, a1, a2) for o, (a1, a2) in zip(owners, queries)])
        for o, (a1, a2), p in zip(owners, queries, probs):
            results[o].candidates.append(Candidate(a1, a2, SenseDistribution(np.asarray(p))))
    choose = disambiguate if strategy == "likelihood" else most_frequent_baseline
    for res in results:
        if res.candidates:
            i, note = choose(res.candidates)
            c = res.candidates[i]
            res.relation = ParsedRelation(c.arg1, c.arg2, c.sense, c.certainty, note)
    return results


def parse_sentence(tagger, sense_model, sentence: AnnotatedSentence, strategy: str = "likelihood") -> List[ParsedRelation]:
    rel = parse_batch(tagger, sense_model, [sentence], strategy)[0].relation
    return [] if rel is None else [rel]


@dataclass
class PipelineEvaluation:
    gold_arguments: EvalReport
    predicted_arguments: EvalReport
    kept: List[Tuple[str, int, int]]
    dropped: List[Tuple[str, int, int]]

    def to_dict(self) -> dict:
        return {
            "gold_arguments": self.gold_arguments.to_dict(),
            "predicted_arguments": self.predicted_arguments.to_dict(),
            "kept": [list(k) for k in self.kept],
            "dropped": [list(k) for k in self.dropped],
        }


def evaluate_pipeline(
    tagger,
    sense_model,
    corpus: Sequence[AnnotatedSentence],
    strategy: str = "likelihood",
    opts: D1Options = D1Options(),
) -> PipelineEvaluation:
    """Sense scores with gold arguments versus pipeline-predicted arguments.

    Relations whose sentence yields no predicted pair are dropped from both
    sides, so the two reports cover exactly the same instances.
    """
    parsed = {p.sentence.key: p for p in parse_batch(tagger, sense_model, list(corpus), strategy)}
    kept, dropped, gold_labels, pred_labels, gold_pairs = [], [], [], [], []
    for ex in generate_d2(corpus, opts):
        rel = parsed[(ex.doc_id, ex.sent_index)].relation
        if rel is None:
            dropped.append(ex.key)
            continue
        kept.append(ex.key)
        gold_labels.append(ex.sense)
        pred_labels.append(rel.sense)
        gold_pairs.append(SensePair.from_d2(ex))
    gold_side = [SENSES[i] for i in sense_model.predict_proba(gold_pairs).argmax(axis=1)] if gold_pairs else []
    return PipelineEvaluation(
        EvalReport("gold-arguments", len(kept), senses=sense_report(gold_labels, gold_side)),
        EvalReport("predicted-arguments", len(kept), senses=sense_report(gold_labels, pred_labels)),
        kept,
        dropped,
    )
