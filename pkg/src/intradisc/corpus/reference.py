"""Reference distributions reported for the PDTB-3 intra-sentential implicit data."""
from .types import SenseLabel as S

# sentences by number of intra-sentential implicit relations
RELATIONS_PER_SENTENCE = {0: 41734, 1: 4314, 2: 321, 3: 42, 4: 15, 5: 4}
TOTAL_SENTENCES = 46430

SENSE_COUNTS = {
    S.COMPARISON_CONCESSION: 66,
    S.COMPARISON_CONCESSION_SPEECHACT: 4,
    S.COMPARISON_CONTRAST: 112,
    S.COMPARISON_SIMILARITY: 7,
    S.CONTINGENCY_CAUSE: 1366,
    S.CONTINGENCY_CAUSE_BELIEF: 66,
    S.CONTINGENCY_CAUSE_SPEECHACT: 1,
    S.CONTINGENCY_CONDITION: 222,
    S.CONTINGENCY_CONDITION_SPEECHACT: 1,
    S.CONTINGENCY_NEGATIVE_CONDITION: 1,
    S.CONTINGENCY_PURPOSE: 1323,
    S.EXPANSION_CONJUNCTION: 667,
    S.EXPANSION_DISJUNCTION: 17,
    S.EXPANSION_EQUIVALENCE: 35,
    S.EXPANSION_INSTANTIATION: 86,
    S.EXPANSION_LEVEL_OF_DETAIL: 565,
    S.EXPANSION_MANNER: 183,
    S.EXPANSION_SUBSTITUTION: 82,
    S.TEMPORAL_ASYNCHRONOUS: 178,
    S.TEMPORAL_SYNCHRONOUS: 175,
}

# best reported model (fine-tuned transformer + parse features), random-split test set
EXACT_MATCH_BEST = {"Arg1": (49.62, 51.39, 50.43), "Arg2": (56.47, 58.31, 57.28)}
