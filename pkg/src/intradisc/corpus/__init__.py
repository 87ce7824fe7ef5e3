"""Corpus ingestion, dataset generation, splits and synthetic fixtures."""
from .datasets import (
    D1Options,
    corpus_stats,
    eligible_relations,
    format_stats,
    generate_d1,
    generate_d2,
    is_eligible,
    relation_tags,
)
from .fixture import Fixture, FixtureLedger, FixtureParams, generate_fixture, marker_token
from .io import (
    CorpusFormatError,
    load_corpus,
    load_d1,
    load_d2,
    save_corpus,
    save_d1,
    save_d2,
)
from .splits import kfold, split_random
from .trees import TreeError, count_terminals, linearize_parse, read_tree
from .types import (
    LABEL_INDEX,
    LABELS,
    MOST_FREQUENT_SENSE,
    NUM_LABELS,
    NUM_SENSES,
    SENSE_INDEX,
    SENSES,
    AnnotatedSentence,
    CorpusError,
    CorpusStats,
    D1Example,
    D2Example,
    GoldRelation,
    SenseLabel,
    is_bio_valid,
    validate_sentence,
)
