"""Deterministic random splits and k-fold partitions over sentences or documents."""
from __future__ import annotations

import math
from typing import List, Sequence, Tuple, TypeVar

import numpy as np

T = TypeVar("T")


def _part_sizes(n: int, ratios: Sequence[float]) -> List[int]:
    """Largest-remainder apportionment, so every part is within 1 of ``n * ratio``."""
    exact = [n * r for r in ratios]
    sizes = [math.floor(x) for x in exact]
    order = sorted(range(len(ratios)), key=lambda i: (-(exact[i] - sizes[i]), i))
    for i in order[: n - sum(sizes)]:
        sizes[i] += 1
    return sizes


def _doc_groups(corpus) -> List[List[int]]:
    groups: dict = {}
    for i, sent in enumerate(corpus):
        groups.setdefault(sent.doc_id, []).append(i)
    return list(groups.values())


def split_random(
    corpus: Sequence[T],
    ratios: Tuple[float, float, float] = (0.6, 0.2, 0.2),
    seed: int = 0,
    unit: str = "sentence",
) -> Tuple[List[T], List[T], List[T]]:
    """Shuffle and cut into train/dev/test; each part keeps original corpus order.

    With ``unit="document"`` whole documents are assigned so part sizes only
    approximate the ratios.
    """
    if len(ratios) != 3 or any(r < 0 for r in ratios) or not math.isclose(sum(ratios), 1.0):
        raise ValueError(f"ratios must be three non-negative numbers summing to 1, got {ratios}")
    rng = np.random.default_rng(seed)
    n = len(corpus)
    if unit == "sentence":
        perm = rng.permutation(n)
        sizes = _part_sizes(n, ratios)
        bounds = np.cumsum([0] + sizes)
        parts = [sorted(perm[bounds[i] : bounds[i + 1]].tolist()) for i in range(3)]
    elif unit == "document":
        groups = _doc_groups(corpus)
        targets = np.cumsum(_part_sizes(n, ratios))
        parts = [[], [], []]
        taken = 0
        for g in rng.permutation(len(groups)):
            part = int(np.searchsorted(targets, taken, side="right"))
            part = min(part, 2)
            parts[part].extend(groups[g])
            taken += len(groups[g])
        parts = [sorted(p) for p in parts]
    else:
        raise ValueError(f"unknown split unit {unit!r}")
    return tuple([corpus[i] for i in p] for p in parts)


def kfold(
    corpus: Sequence[T], k: int = 10, seed: int = 0, two_fold_dev_fraction: float = 0.2
) -> List[Tuple[List[T], List[T], List[T]]]:
    """k rotating (train, dev, test) folds: fold i tests on part i and early-stops on part i+1.

    For k=2 the dev set is instead the last ``two_fold_dev_fraction`` of the
    non-test part.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    if len(corpus) < k:
        raise ValueError(f"corpus of {len(corpus)} sentences is smaller than k={k}")
    perm = np.random.default_rng(seed).permutation(len(corpus))
    parts = [sorted(p.tolist()) for p in np.array_split(perm, k)]
    folds = []
    for i in range(k):
        if k == 2:
            # no third part to rotate in: hold out the tail of the non-test part
            rest = parts[1 - i]
            n_dev = max(1, round(len(rest) * two_fold_dev_fraction))
            train_idx, dev_idx = rest[:-n_dev], rest[-n_dev:]
        else:
            dev_i = (i + 1) % k
            train_idx = sorted(j for p in range(k) if p not in (i, dev_i) for j in parts[p])
            dev_idx = parts[dev_i]
        folds.append(
            (
                [corpus[j] for j in train_idx],
                [corpus[j] for j in dev_idx],
                [corpus[j] for j in parts[i]],
            )
        )
    return folds
