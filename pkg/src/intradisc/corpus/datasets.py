"""Build the argument-tagging (D1) and sense-classification (D2) datasets."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, List, Sequence

from .types import (
    SENSES,
    AnnotatedSentence,
    CorpusStats,
    D1Example,
    D2Example,
    GoldRelation,
)


@dataclass(frozen=True)
class D1Options:
    skip_discontinuous: bool = True
    include_altlex: bool = True
    exclude_linked: bool = True


def is_eligible(rel: GoldRelation, opts: D1Options = D1Options()) -> bool:
    if opts.exclude_linked and rel.linked_to_explicit:
        return False
    if rel.provenance == "AltLex" and not opts.include_altlex:
        return False
    if opts.skip_discontinuous and not rel.continuous:
        return False
    return True


def eligible_relations(sent: AnnotatedSentence, opts: D1Options = D1Options()) -> List[int]:
    return [i for i, r in enumerate(sent.relations) if is_eligible(r, opts)]


def _runs(indices: Iterable[int]) -> List[tuple]:
    runs: List[list] = []
    for i in sorted(indices):
        if runs and runs[-1][1] == i:
            runs[-1][1] = i + 1
        else:
            runs.append([i, i + 1])
    return [tuple(r) for r in runs]


def relation_tags(n_tokens: int, rel: GoldRelation) -> tuple:
    """BIO tags for one relation; each contiguous run of an argument opens with B."""
    tags = ["O"] * n_tokens
    for role in ("Arg1", "Arg2"):
        for start, end in _runs(rel.tokens_of(role)):
            tags[start] = "B-" + role
            for j in range(start + 1, end):
                tags[j] = "I-" + role
    return tuple(tags)


def generate_d1(corpus: Sequence[AnnotatedSentence], opts: D1Options = D1Options()) -> List[D1Example]:
    """One example per eligible relation; sentences without one give a single all-O example."""
    out: List[D1Example] = []
    for sent in corpus:
        idx = eligible_relations(sent, opts)
        if not idx:
            out.append(D1Example(sent, ("O",) * len(sent.tokens)))
            continue
        for i in idx:
            rel = sent.relations[i]
            out.append(D1Example(sent, relation_tags(len(sent.tokens), rel), rel, i))
    return out


def generate_d2(corpus: Sequence[AnnotatedSentence], opts: D1Options = D1Options()) -> List[D2Example]:
    out: List[D2Example] = []
    for sent in corpus:
        for i in eligible_relations(sent, opts):
            rel = sent.relations[i]
            out.append(
                D2Example(
                    arg1_tokens=tuple(sent.tokens[j] for j in rel.tokens_of("Arg1")),
                    arg2_tokens=tuple(sent.tokens[j] for j in rel.tokens_of("Arg2")),
                    parse=sent.parse,
                    sense=rel.sense,
                    doc_id=sent.doc_id,
                    sent_index=sent.sent_index,
                    arg1_spans=rel.arg1_spans,
                    arg2_spans=rel.arg2_spans,
                    relation_index=i,
                )
            )
    return out


# Corpus statistics cover every non-linked implicit/AltLex relation, continuous or not.
STATS_OPTIONS = D1Options(skip_discontinuous=False)


def corpus_stats(corpus: Sequence[AnnotatedSentence], opts: D1Options = STATS_OPTIONS) -> CorpusStats:
    per_sentence = Counter(len(eligible_relations(s, opts)) for s in corpus)
    senses = Counter(
        s.relations[i].sense for s in corpus for i in eligible_relations(s, opts)
    )
    n_sent = sum(per_sentence.values())
    n_rel = sum(senses.values())
    by_count = {
        k: (per_sentence[k], 100.0 * per_sentence[k] / n_sent) for k in sorted(per_sentence)
    }
    histogram = {s: (senses[s], 100.0 * senses[s] / n_rel) for s in SENSES if senses[s]}
    return CorpusStats(by_count, histogram)


def format_stats(stats: CorpusStats) -> str:
    lines = [f"{'Number of relations':<20} {'Count':>8} {'%':>8}"]
    for k, (count, pct) in stats.sentences_by_relation_count.items():
        lines.append(f"{k:<20} {count:>8,} {pct:>7.2f}%")
    lines.append(f"{'total':<20} {stats.total_sentences:>8,} {'100%' if stats.total_sentences else '0%':>8}")
    lines.append("")
    lines.append(f"{'Sense':<34} {'Count':>6} {'%':>8}")
    for sense, (count, pct) in stats.sense_histogram.items():
        lines.append(f"{sense.value:<34} {count:>6} {pct:>7.2f}%")
    return "\n".join(lines)
