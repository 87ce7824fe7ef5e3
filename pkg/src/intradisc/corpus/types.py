"""Core corpus data types: sentences, gold relations, sense labels and BIO tags."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

Span = Tuple[int, int]


class CorpusError(ValueError):
    """Raised for malformed or invariant-violating corpus data."""


class SenseLabel(str, Enum):
    """Level-2 PDTB-3 senses observed for intra-sentential implicit relations."""

    COMPARISON_CONCESSION = "Comparison.Concession"
    COMPARISON_CONCESSION_SPEECHACT = "Comparison.Concession+SpeechAct"
    COMPARISON_CONTRAST = "Comparison.Contrast"
    COMPARISON_SIMILARITY = "Comparison.Similarity"
    CONTINGENCY_CAUSE = "Contingency.Cause"
    CONTINGENCY_CAUSE_BELIEF = "Contingency.Cause+Belief"
    CONTINGENCY_CAUSE_SPEECHACT = "Contingency.Cause+SpeechAct"
    CONTINGENCY_CONDITION = "Contingency.Condition"
    CONTINGENCY_CONDITION_SPEECHACT = "Contingency.Condition+SpeechAct"
    CONTINGENCY_NEGATIVE_CONDITION = "Contingency.Negative-condition"
    CONTINGENCY_PURPOSE = "Contingency.Purpose"
    EXPANSION_CONJUNCTION = "Expansion.Conjunction"
    EXPANSION_DISJUNCTION = "Expansion.Disjunction"
    EXPANSION_EQUIVALENCE = "Expansion.Equivalence"
    EXPANSION_INSTANTIATION = "Expansion.Instantiation"
    EXPANSION_LEVEL_OF_DETAIL = "Expansion.Level-of-detail"
    EXPANSION_MANNER = "Expansion.Manner"
    EXPANSION_SUBSTITUTION = "Expansion.Substitution"
    TEMPORAL_ASYNCHRONOUS = "Temporal.Asynchronous"
    TEMPORAL_SYNCHRONOUS = "Temporal.Synchronous"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str) -> "SenseLabel":
        try:
            return cls(text)
        except ValueError:
            raise CorpusError(f"unknown sense label {text!r}") from None


SENSES: Tuple[SenseLabel, ...] = tuple(SenseLabel)
SENSE_INDEX = {s: i for i, s in enumerate(SENSES)}
NUM_SENSES = len(SENSES)
MOST_FREQUENT_SENSE = SenseLabel.CONTINGENCY_CAUSE

# O first: Viterbi ties resolve toward the lowest index, so an all-zero model decodes all-O.
LABELS: Tuple[str, ...] = ("O", "B-Arg1", "I-Arg1", "B-Arg2", "I-Arg2")
LABEL_INDEX = {lab: i for i, lab in enumerate(LABELS)}
NUM_LABELS = len(LABELS)
ROLES = ("Arg1", "Arg2")

PROVENANCES = ("Implicit", "AltLex")


@dataclass(frozen=True)
class GoldRelation:
    arg1_spans: Tuple[Span, ...]
    arg2_spans: Tuple[Span, ...]
    sense: SenseLabel
    provenance: str = "Implicit"
    linked_to_explicit: bool = False

    @property
    def continuous(self) -> bool:
        return len(self.arg1_spans) == 1 and len(self.arg2_spans) == 1

    def tokens_of(self, role: str) -> List[int]:
        spans = self.arg1_spans if role == "Arg1" else self.arg2_spans
        return [i for s, e in spans for i in range(s, e)]

    @property
    def first_start(self) -> int:
        return min(self.arg1_spans[0][0], self.arg2_spans[0][0])

    @property
    def order(self) -> str:
        """``Arg1-Arg2`` or ``Arg2-Arg1`` by which argument starts further left."""
        return "Arg1-Arg2" if self.arg1_spans[0][0] < self.arg2_spans[0][0] else "Arg2-Arg1"


@dataclass(frozen=True)
class AnnotatedSentence:
    doc_id: str
    sent_index: int
    tokens: Tuple[str, ...]
    parse: str = ""
    relations: Tuple[GoldRelation, ...] = ()

    @property
    def key(self) -> Tuple[str, int]:
        return (self.doc_id, self.sent_index)

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class D1Example:
    sentence: AnnotatedSentence
    tags: Tuple[str, ...]
    source_relation: Optional[GoldRelation] = None
    # position of source_relation within sentence.relations; -1 for all-O examples
    relation_index: int = -1

    @property
    def key(self) -> Tuple[str, int, int]:
        return (self.sentence.doc_id, self.sentence.sent_index, self.relation_index)


@dataclass(frozen=True)
class D2Example:
    arg1_tokens: Tuple[str, ...]
    arg2_tokens: Tuple[str, ...]
    parse: str
    sense: SenseLabel
    doc_id: str = ""
    sent_index: int = 0
    arg1_spans: Tuple[Span, ...] = ()
    arg2_spans: Tuple[Span, ...] = ()
    relation_index: int = 0

    @property
    def key(self) -> Tuple[str, int, int]:
        return (self.doc_id, self.sent_index, self.relation_index)


@dataclass
class CorpusStats:
    """Per-sentence relation counts and sense histogram; values are ``(count, percent)``."""

    sentences_by_relation_count: dict = field(default_factory=dict)
    sense_histogram: dict = field(default_factory=dict)

    @property
    def total_sentences(self) -> int:
        return sum(c for c, _ in self.sentences_by_relation_count.values())

    @property
    def total_relations(self) -> int:
        return sum(c for c, _ in self.sense_histogram.values())


def is_bio_valid(tags: Sequence[str]) -> bool:
    prev = "O"
    for tag in tags:
        if tag not in LABEL_INDEX:
            return False
        if tag.startswith("I-") and prev not in ("B-" + tag[2:], tag):
            return False
        prev = tag
    return True


def _check_spans(spans: Sequence[Span], n: int, where: str) -> None:
    if not spans:
        raise CorpusError(f"{where}: empty span list")
    prev_end = 0
    for start, end in spans:
        if not (0 <= start < end <= n):
            raise CorpusError(f"{where}: span [{start}, {end}) outside [0, {n})")
        if start < prev_end:
            raise CorpusError(f"{where}: spans overlap or are unsorted")
        prev_end = end


def validate_sentence(sent: AnnotatedSentence) -> None:
    """Check every invariant of a sentence; raises CorpusError naming the sentence."""
    from .trees import count_terminals

    where = f"{sent.doc_id}/{sent.sent_index}"
    if sent.sent_index < 0:
        raise CorpusError(f"{where}: negative sent_index")
    if not sent.tokens:
        raise CorpusError(f"{where}: empty token list")
    n = len(sent.tokens)
    if sent.parse:
        n_term = count_terminals(sent.parse)
        if n_term != n:
            raise CorpusError(f"{where}: parse has {n_term} terminals for {n} tokens")
    for r, rel in enumerate(sent.relations):
        rwhere = f"{where} relation {r}"
        _check_spans(rel.arg1_spans, n, rwhere + " arg1")
        _check_spans(rel.arg2_spans, n, rwhere + " arg2")
        if set(rel.tokens_of("Arg1")) & set(rel.tokens_of("Arg2")):
            raise CorpusError(f"{rwhere}: Arg1 and Arg2 overlap")
        if rel.provenance not in PROVENANCES:
            raise CorpusError(f"{rwhere}: unknown provenance {rel.provenance!r}")
        if not isinstance(rel.sense, SenseLabel):
            raise CorpusError(f"{rwhere}: sense is not a SenseLabel")
