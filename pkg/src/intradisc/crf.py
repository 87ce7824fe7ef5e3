"""Linear-chain CRF over the five BIO labels.

All functions work on a single sequence: ``emissions`` is an ``(n, L)`` array
and tags are label indices (or label strings, converted on entry).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .corpus.types import LABEL_INDEX, LABELS, NUM_LABELS

# Added to disallowed cells when the mask is used inside the training objective.
MASK_PENALTY = -1e4


@dataclass
class CrfParams:
    transitions: np.ndarray  # (L, L); [prev, next]
    start: np.ndarray  # (L,)
    end: np.ndarray  # (L,)

    @classmethod
    def zeros(cls, n_labels: int = NUM_LABELS, dtype=np.float64) -> "CrfParams":
        return cls(
            np.zeros((n_labels, n_labels), dtype),
            np.zeros(n_labels, dtype),
            np.zeros(n_labels, dtype),
        )


@dataclass(frozen=True)
class ConstraintMask:
    transitions: np.ndarray  # bool (L, L); True = allowed
    start: np.ndarray
    end: np.ndarray


@dataclass
class CrfGrads:
    emissions: np.ndarray
    transitions: np.ndarray
    start: np.ndarray
    end: np.ndarray


def bio_mask(labels: Sequence[str] = LABELS) -> ConstraintMask:
    """I-X may only follow B-X or I-X and may not open a sequence; any label may end one."""
    n = len(labels)
    trans = np.ones((n, n), dtype=bool)
    start = np.ones(n, dtype=bool)
    for j, lab in enumerate(labels):
        if lab.startswith("I-"):
            role = lab[2:]
            start[j] = False
            for i, prev in enumerate(labels):
                trans[i, j] = prev in ("B-" + role, "I-" + role)
    return ConstraintMask(trans, start, np.ones(n, dtype=bool))


def as_indices(tags) -> np.ndarray:
    return np.array([LABEL_INDEX[t] if isinstance(t, str) else int(t) for t in tags], dtype=np.int64)


def _logsumexp(x: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(x, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    out = np.log(np.sum(np.exp(x - m), axis=axis, keepdims=True)) + m
    return np.squeeze(out, axis=axis)


def _effective(crf: CrfParams, mask: Optional[ConstraintMask], fill: float):
    if mask is None:
        return crf.transitions, crf.start, crf.end
    return (
        np.where(mask.transitions, crf.transitions, fill),
        np.where(mask.start, crf.start, fill),
        np.where(mask.end, crf.end, fill),
    )


def score_sequence(crf: CrfParams, emissions: np.ndarray, tags) -> float:
    y = as_indices(tags)
    if len(y) != len(emissions) or len(y) == 0:
        raise ValueError("tags must be non-empty and match the emission length")
    score = crf.start[y[0]] + crf.end[y[-1]] + emissions[np.arange(len(y)), y].sum()
    score += crf.transitions[y[:-1], y[1:]].sum()
    return float(score)


def _forward(trans, start, emissions) -> np.ndarray:
    n = len(emissions)
    alpha = np.empty_like(emissions)
    alpha[0] = start + emissions[0]
    for j in range(1, n):
        alpha[j] = _logsumexp(alpha[j - 1][:, None] + trans, axis=0) + emissions[j]
    return alpha


def _backward(trans, end, emissions) -> np.ndarray:
    n = len(emissions)
    beta = np.empty_like(emissions)
    beta[-1] = end
    for j in range(n - 2, -1, -1):
        beta[j] = _logsumexp(trans + (emissions[j + 1] + beta[j + 1])[None, :], axis=1)
    return beta


def log_partition(crf: CrfParams, emissions: np.ndarray, mask: Optional[ConstraintMask] = None) -> float:
    """Log of the summed exp-scores of all label sequences (forward algorithm)."""
    trans, start, end = _effective(crf, mask, MASK_PENALTY)
    alpha = _forward(trans, start, emissions)
    return float(_logsumexp(alpha[-1] + end, axis=0))


def marginals(crf: CrfParams, emissions: np.ndarray, mask: Optional[ConstraintMask] = None):
    """Posterior node marginals ``(n, L)``, pairwise marginals ``(n-1, L, L)`` and log Z."""
    trans, start, end = _effective(crf, mask, MASK_PENALTY)
    alpha = _forward(trans, start, emissions)
    beta = _backward(trans, end, emissions)
    log_z = _logsumexp(alpha[-1] + end, axis=0)
    node = np.exp(alpha + beta - log_z)
    pair = np.exp(
        alpha[:-1, :, None] + trans[None] + (emissions[1:] + beta[1:])[:, None, :] - log_z
    )
    return node, pair, float(log_z)


def nll(
    crf: CrfParams, emissions: np.ndarray, gold, mask: Optional[ConstraintMask] = None
) -> Tuple[float, CrfGrads]:
    """Negative log-likelihood of ``gold`` and its exact gradients.

    Gradients are expected feature counts minus observed counts. With ``mask``
    the disallowed cells are penalised in both terms (constrained training).
    """
    y = as_indices(gold)
    trans, start, end = _effective(crf, mask, MASK_PENALTY)
    node, pair, log_z = marginals(crf, emissions, mask)
    gold_score = score_sequence(CrfParams(trans, start, end), emissions, y)
    loss = max(log_z - gold_score, 0.0)

    n = len(y)
    g_em = node.copy()
    g_em[np.arange(n), y] -= 1.0
    g_trans = pair.sum(axis=0)
    np.subtract.at(g_trans, (y[:-1], y[1:]), 1.0)
    g_start = node[0].copy()
    g_start[y[0]] -= 1.0
    g_end = node[-1].copy()
    g_end[y[-1]] -= 1.0
    if mask is not None:
        # penalised cells are constants, not parameters
        g_trans = np.where(mask.transitions, g_trans, 0.0)
        g_start = np.where(mask.start, g_start, 0.0)
        g_end = np.where(mask.end, g_end, 0.0)
    return loss, CrfGrads(g_em, g_trans, g_start, g_end)


def token_nll(crf: CrfParams, emissions: np.ndarray, gold) -> float:
    """Sum over positions of ``-log p(y_j)`` under the posterior marginals."""
    y = as_indices(gold)
    node, _, _ = marginals(crf, emissions)
    return float(-np.log(node[np.arange(len(y)), y]).sum())


def viterbi_decode(
    crf: CrfParams, emissions: np.ndarray, mask: Optional[ConstraintMask] = None
) -> Tuple[list, float]:
    """Highest-scoring admissible label sequence and its score.

    Disallowed cells are ``-inf`` so no masked path can ever win. Ties go to
    the lower label index at every backtrack step.
    """
    trans, start, end = _effective(crf, mask, -np.inf)
    n, n_labels = emissions.shape
    back = np.zeros((n, n_labels), dtype=np.int64)
    delta = start + emissions[0]
    for j in range(1, n):
        cand = delta[:, None] + trans
        back[j] = np.argmax(cand, axis=0)
        delta = cand[back[j], np.arange(n_labels)] + emissions[j]
    delta = delta + end
    best = int(np.argmax(delta))
    score = float(delta[best])
    path = [best]
    for j in range(n - 1, 0, -1):
        best = int(back[j, best])
        path.append(best)
    path.reverse()
    return path, score


def decode_labels(crf: CrfParams, emissions: np.ndarray, mask: Optional[ConstraintMask] = None) -> Tuple[str, ...]:
    path, _ = viterbi_decode(crf, emissions, mask)
    return tuple(LABELS[i] for i in path)
