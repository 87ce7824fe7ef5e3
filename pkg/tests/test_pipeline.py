import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intradisc.corpus import NUM_SENSES, SENSE_INDEX, MOST_FREQUENT_SENSE
from intradisc.corpus.types import AnnotatedSentence, GoldRelation, SenseLabel
from intradisc.encoder import EncoderConfigError
from intradisc.network import EncoderConfig
from intradisc.pipeline import (
    MAX_PAIRS,
    Candidate,
    Note,
    ParsedRelation,
    candidate_pairs,
    check_compatible,
    disambiguate,
    evaluate_pipeline,
    most_frequent_baseline,
    parse_batch,
    parse_sentence,
)
from intradisc.sense import SenseDistribution
from intradisc.tagger import ArgumentSpan, extract_spans

CAUSE = SenseLabel.CONTINGENCY_CAUSE
CONJ = SenseLabel.EXPANSION_CONJUNCTION
ASYNC = SenseLabel.TEMPORAL_ASYNCHRONOUS


def _dist(sense, p):
    probs = np.full(NUM_SENSES, (1 - p) / (NUM_SENSES - 1))
    probs[SENSE_INDEX[sense]] = p
    return SenseDistribution(probs)


class StubTagger:
    def __init__(self, tags_by_key):
        self.tags_by_key = tags_by_key
        self.calls = 0

    def predict(self, sentences):
        self.calls += 1
        return [self.tags_by_key.get(s.key, ("O",) * len(s.tokens)) for s in sentences]


class StubSense:
    """Looks up a distribution by (arg1 start, arg2 start); unknown pairs get a flat Conjunction guess."""

    def __init__(self, table=None):
        self.table = table or {}
        self.queries = []

    def predict_proba(self, pairs):
        rows = []
        for p in pairs:
            self.queries.append(p)
            d = self.table.get((p.arg1_index[0], p.arg2_index[0]), _dist(CONJ, 0.3))
            rows.append(d.probs)
        return np.array(rows).reshape(len(pairs), NUM_SENSES)


def _sentence(n=10, rels=(), idx=0):
    return AnnotatedSentence("doc", idx, tuple(f"t{i}" for i in range(n)), "", tuple(rels))


TWO_ARG1 = ("B-Arg1", "I-Arg1", "O", "B-Arg2", "I-Arg2", "O", "B-Arg1", "O", "O", "O")


def test_all_o_gives_no_relation():
    sent = _sentence()
    sense = StubSense()
    assert parse_sentence(StubTagger({}), sense, sent) == []
    assert sense.queries == []


def test_unique_pair():
    sent = _sentence()
    tags = ("B-Arg1", "I-Arg1", "O", "B-Arg2", "O", "O", "O", "O", "O", "O")
    [rel] = parse_sentence(StubTagger({sent.key: tags}), StubSense({(0, 3): _dist(ASYNC, 0.4)}), sent)
    assert (rel.arg1, rel.arg2, rel.sense, rel.note) == (ArgumentSpan(0, 2, "Arg1"), ArgumentSpan(3, 4, "Arg2"), ASYNC, Note.UNIQUE)
    assert rel.probability == pytest.approx(0.4)


def test_equal_senses_take_first_pair():
    sent = _sentence()
    table = {(0, 3): _dist(CONJ, 0.5), (6, 3): _dist(CONJ, 0.95)}
    [rel] = parse_sentence(StubTagger({sent.key: TWO_ARG1}), StubSense(table), sent)
    assert rel.note == Note.SKIPPED_EQUAL_SENSES
    assert rel.arg1 == ArgumentSpan(0, 2, "Arg1")


def test_higher_certainty_wins():
    sent = _sentence()
    table = {(0, 3): _dist(CONJ, 0.6), (6, 3): _dist(CAUSE, 0.9)}
    [rel] = parse_sentence(StubTagger({sent.key: TWO_ARG1}), StubSense(table), sent)
    assert (rel.arg1.start, rel.sense, rel.note) == (6, CAUSE, Note.CHOSEN_BY_LIKELIHOOD)
    assert rel.probability == pytest.approx(0.9)


def test_certainty_tie_goes_to_first_pair():
    cands = [
        Candidate(ArgumentSpan(0, 1, "Arg1"), ArgumentSpan(2, 3, "Arg2"), _dist(CONJ, 0.7)),
        Candidate(ArgumentSpan(4, 5, "Arg1"), ArgumentSpan(2, 3, "Arg2"), _dist(CAUSE, 0.7)),
    ]
    assert disambiguate(cands) == (0, Note.CHOSEN_BY_LIKELIHOOD)


def test_baseline_prefers_majority_sense():
    sent = _sentence()
    table = {(0, 3): _dist(CONJ, 0.9), (6, 3): _dist(MOST_FREQUENT_SENSE, 0.2)}
    [rel] = parse_sentence(StubTagger({sent.key: TWO_ARG1}), StubSense(table), sent, strategy="baseline")
    assert (rel.arg1.start, rel.sense, rel.note) == (6, MOST_FREQUENT_SENSE, Note.BASELINE_MOST_FREQUENT)


def test_baseline_falls_back_to_first_pair():
    cands = [
        Candidate(ArgumentSpan(0, 1, "Arg1"), ArgumentSpan(2, 3, "Arg2"), _dist(CONJ, 0.3)),
        Candidate(ArgumentSpan(4, 5, "Arg1"), ArgumentSpan(2, 3, "Arg2"), _dist(ASYNC, 0.9)),
    ]
    assert most_frequent_baseline(cands) == (0, Note.BASELINE_MOST_FREQUENT)


def test_unknown_strategy_rejected():
    with pytest.raises(ValueError):
        parse_batch(StubTagger({}), StubSense(), [_sentence()], strategy="random")


def test_empty_candidates_rejected():
    with pytest.raises(ValueError):
        disambiguate([])


def test_pipeline_is_deterministic():
    sent = _sentence()
    table = {(0, 3): _dist(CONJ, 0.6), (6, 3): _dist(CAUSE, 0.9)}
    runs = [parse_batch(StubTagger({sent.key: TWO_ARG1}), StubSense(table), [sent])[0].to_dict() for _ in range(2)]
    assert runs[0] == runs[1]
    json.dumps(runs[0])


def test_candidate_order_and_cap():
    spans = [ArgumentSpan(2 * i, 2 * i + 1, "Arg1" if i % 2 else "Arg2") for i in range(12)]
    pairs = candidate_pairs(spans)
    assert len(pairs) == MAX_PAIRS < 36
    keys = [(min(a.start, b.start), max(a.start, b.start)) for a, b in pairs]
    assert keys == sorted(keys)
    assert pairs[0] == (ArgumentSpan(2, 3, "Arg1"), ArgumentSpan(0, 1, "Arg2"))


@st.composite
def tag_rows(draw):
    out = []
    for _ in range(draw(st.integers(1, 14))):
        choices = ["O", "B-Arg1", "B-Arg2"]
        if out and out[-1] != "O":
            choices.append("I-" + out[-1][2:])
        out.append(draw(st.sampled_from(choices)))
    return tuple(out)


@given(tag_rows(), st.integers(0, 2**16))
@settings(max_examples=200, deadline=None)
def test_output_relation_is_well_formed(tags, seed):
    sent = _sentence(len(tags))
    rng = np.random.default_rng(seed)
    spans = extract_spans(tags)
    table = {}
    for a1 in spans:
        for a2 in spans:
            table[(a1.start, a2.start)] = SenseDistribution(rng.dirichlet(np.ones(NUM_SENSES)))
    res = parse_batch(StubTagger({sent.key: tags}), StubSense(table), [sent])[0]
    has_pair = any(s.role == "Arg1" for s in spans) and any(s.role == "Arg2" for s in spans)
    assert (res.relation is not None) == has_pair
    if res.relation is not None:
        assert isinstance(res.relation, ParsedRelation)
        assert res.relation.arg1 in spans and res.relation.arg2 in spans
        if res.relation.note == Note.CHOSEN_BY_LIKELIHOOD:
            assert res.relation.probability == max(c.certainty for c in res.candidates)


def test_sense_model_receives_argument_tokens_and_indices():
    sent = _sentence()
    tags = ("O", "B-Arg2", "I-Arg2", "O", "O", "B-Arg1", "O", "O", "O", "O")
    sense = StubSense()
    parse_batch(StubTagger({sent.key: tags}), sense, [sent])
    [q] = sense.queries
    assert q.arg1_tokens == ("t5",) and q.arg2_tokens == ("t1", "t2")
    assert q.arg2_index == (1, 2) and q.key == sent.key


def test_parse_mode_mismatch_is_config_error():
    class M:
        def __init__(self, mode):
            self.encoder = EncoderConfig(use_parse=True, parse_mode=mode)

    with pytest.raises(EncoderConfigError):
        check_compatible(M("labels_only"), M("labels_and_terminals"))
    check_compatible(M("labels_only"), M("labels_only"))


# ---------------------------------------------------------------- evaluation


def _eval_corpus():
    s0 = _sentence(10, [GoldRelation(((0, 2),), ((3, 5),), CAUSE)], idx=0)
    s1 = _sentence(10, [GoldRelation(((0, 2),), ((3, 5),), CONJ), GoldRelation(((6, 7),), ((8, 9),), ASYNC)], idx=1)
    s2 = _sentence(10, [GoldRelation(((1, 2),), ((4, 5),), CONJ)], idx=2)
    return [s0, s1, s2]


def test_evaluation_compares_same_instances():
    corpus = _eval_corpus()
    tags = ("B-Arg1", "I-Arg1", "O", "B-Arg2", "I-Arg2", "O", "O", "O", "O", "O")
    tagger = StubTagger({corpus[0].key: tags, corpus[1].key: tags})
    sense = StubSense({(0, 3): _dist(CAUSE, 0.8), (6, 8): _dist(ASYNC, 0.8), (1, 4): _dist(CONJ, 0.8)})
    ev = evaluate_pipeline(tagger, sense, corpus)
    assert ev.kept == [("doc", 0, 0), ("doc", 1, 0), ("doc", 1, 1)]
    assert ev.dropped == [("doc", 2, 0)]
    assert ev.gold_arguments.n_instances == ev.predicted_arguments.n_instances == 3
    assert ev.gold_arguments.senses.confusion.sum() == ev.predicted_arguments.senses.confusion.sum() == 3
    # gold pairs: Cause, Cause (wrong for Conj), Async. Predicted pair is (0,3) -> Cause for all three.
    assert ev.gold_arguments.senses.micro.f1 == pytest.approx(200 / 3)
    assert ev.predicted_arguments.senses.micro.f1 == pytest.approx(100 / 3)
    json.dumps(ev.to_dict())


def test_tagger_predicting_nothing_drops_everything():
    ev = evaluate_pipeline(StubTagger({}), StubSense(), _eval_corpus())
    assert ev.kept == [] and len(ev.dropped) == 4
    assert ev.gold_arguments.n_instances == 0
    assert ev.predicted_arguments.senses.micro == ev.gold_arguments.senses.micro
