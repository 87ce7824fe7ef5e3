"""Scoring: exact-match arguments, token labels, argument order, senses, slices, cross-validation."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Dict, Hashable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .corpus.types import LABELS, NUM_SENSES, ROLES, SENSE_INDEX, SENSES, D1Example, SenseLabel
from .tagger import ArgumentSpan, extract_spans

ORDERS = ("Arg1-Arg2", "Arg2-Arg1")
SLICE_KINDS = ("multi", "left", "right", "sense")


class EvalError(ValueError):
    pass


@dataclass(frozen=True)
class PRF:
    """Precision/recall/F1 on a 0-100 scale plus gold support."""

    precision: float = 0.0
    recall: float = 0.0
    f1: float = 0.0
    support: int = 0

    @classmethod
    def from_counts(cls, tp: int, n_pred: int, n_gold: int) -> "PRF":
        p = tp / n_pred if n_pred else 0.0
        r = tp / n_gold if n_gold else 0.0
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(100 * p, 100 * r, 100 * f, n_gold)

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1, "support": self.support}

    @classmethod
    def from_dict(cls, d: dict) -> "PRF":
        return cls(float(d["precision"]), float(d["recall"]), float(d["f1"]), int(d["support"]))


# ---------------------------------------------------------------- arguments


def _check_keys(gold: Mapping, pred: Mapping) -> None:
    if set(gold) != set(pred):
        missing = sorted(map(str, set(gold) ^ set(pred)))[:5]
        raise EvalError(f"gold and predicted sentence keys differ, e.g. {missing}")


def exact_match(
    gold: Mapping[Hashable, Sequence[ArgumentSpan]], pred: Mapping[Hashable, Sequence[ArgumentSpan]]
) -> Dict[str, PRF]:
    """Per-role P/R/F1 where only identical [start, end) intervals count.

    Predicted spans are matched greedily, left to right, against unused gold
    spans of the same role, so each gold argument is credited at most once.
    """
    _check_keys(gold, pred)
    tp = dict.fromkeys(ROLES, 0)
    n_pred = dict.fromkeys(ROLES, 0)
    n_gold = dict.fromkeys(ROLES, 0)
    for key in gold:
        unused = {}
        for sp in gold[key]:
            n_gold[sp.role] += 1
            unused[(sp.role, sp.start, sp.end)] = unused.get((sp.role, sp.start, sp.end), 0) + 1
        for sp in sorted(pred[key]):
            n_pred[sp.role] += 1
            k = (sp.role, sp.start, sp.end)
            if unused.get(k, 0) > 0:
                unused[k] -= 1
                tp[sp.role] += 1
    return {r: PRF.from_counts(tp[r], n_pred[r], n_gold[r]) for r in ROLES}


def token_prf(gold: Sequence[Sequence[str]], pred: Sequence[Sequence[str]]) -> Dict[str, PRF]:
    if len(gold) != len(pred):
        raise EvalError(f"{len(gold)} gold sequences but {len(pred)} predicted")
    tp = dict.fromkeys(LABELS, 0)
    n_pred = dict.fromkeys(LABELS, 0)
    n_gold = dict.fromkeys(LABELS, 0)
    for i, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            raise EvalError(f"sequence {i}: {len(g)} gold tags but {len(p)} predicted")
        for a, b in zip(g, p):
            n_gold[a] += 1
            n_pred[b] += 1
            tp[a] += a == b
    return {lab: PRF.from_counts(tp[lab], n_pred[lab], n_gold[lab]) for lab in LABELS}


def span_order(spans: Sequence[ArgumentSpan]) -> Optional[str]:
    """Order class from the first span of each role, or None if a role is missing."""
    first = {}
    for sp in sorted(spans):
        first.setdefault(sp.role, sp.start)
    if len(first) < 2:
        return None
    return ORDERS[0] if first["Arg1"] < first["Arg2"] else ORDERS[1]


def order_score(
    gold: Mapping[Hashable, Sequence[ArgumentSpan]], pred: Mapping[Hashable, Sequence[ArgumentSpan]]
) -> Dict[str, PRF]:
    """Per-class P/R/F1 of argument order; a prediction lacking a role counts only against recall."""
    _check_keys(gold, pred)
    tp = dict.fromkeys(ORDERS, 0)
    n_pred = dict.fromkeys(ORDERS, 0)
    n_gold = dict.fromkeys(ORDERS, 0)
    for key in gold:
        g = span_order(gold[key])
        if g is None:
            continue
        p = span_order(pred[key])
        n_gold[g] += 1
        if p is not None:
            n_pred[p] += 1
            tp[p] += p == g
    return {o: PRF.from_counts(tp[o], n_pred[o], n_gold[o]) for o in ORDERS}


# ---------------------------------------------------------------- senses


@dataclass
class SenseReport:
    per_sense: Dict[str, PRF]
    micro: PRF
    weighted: PRF
    confusion: np.ndarray  # rows gold, columns predicted, SENSES order

    @property
    def accuracy(self) -> float:
        n = self.confusion.sum()
        return 100.0 * np.trace(self.confusion) / n if n else 0.0

    def to_dict(self) -> dict:
        return {
            "per_sense": {k: v.to_dict() for k, v in self.per_sense.items()},
            "micro": self.micro.to_dict(),
            "weighted": self.weighted.to_dict(),
            "confusion": self.confusion.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SenseReport":
        return cls(
            {k: PRF.from_dict(v) for k, v in d["per_sense"].items()},
            PRF.from_dict(d["micro"]),
            PRF.from_dict(d["weighted"]),
            np.array(d["confusion"], dtype=np.int64).reshape(NUM_SENSES, NUM_SENSES),
        )

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SenseReport)
            and self.per_sense == other.per_sense
            and self.micro == other.micro
            and self.weighted == other.weighted
            and np.array_equal(self.confusion, other.confusion)
        )


def sense_report(gold: Sequence[SenseLabel], pred: Sequence[SenseLabel]) -> SenseReport:
    if len(gold) != len(pred):
        raise EvalError(f"{len(gold)} gold labels but {len(pred)} predicted")
    cm = np.zeros((NUM_SENSES, NUM_SENSES), dtype=np.int64)
    for g, p in zip(gold, pred):
        cm[SENSE_INDEX[SenseLabel(g)], SENSE_INDEX[SenseLabel(p)]] += 1
    tp = np.diag(cm)
    n_gold = cm.sum(axis=1)
    n_pred = cm.sum(axis=0)
    per = {s.value: PRF.from_counts(int(tp[i]), int(n_pred[i]), int(n_gold[i])) for i, s in enumerate(SENSES)}
    n = int(cm.sum())
    micro = PRF.from_counts(int(tp.sum()), n, n)
    if n:
        w = n_gold / n
        vals = np.array([[per[s.value].precision, per[s.value].recall, per[s.value].f1] for s in SENSES])
        wp, wr, wf = (w[:, None] * vals).sum(axis=0)
        weighted = PRF(float(wp), float(wr), float(wf), n)
    else:
        weighted = PRF()
    return SenseReport(per, micro, weighted, cm)


# ---------------------------------------------------------------- reports


@dataclass
class EvalReport:
    slice: str = "all"
    n_instances: int = 0
    arguments: Dict[str, PRF] = field(default_factory=dict)
    tokens: Dict[str, PRF] = field(default_factory=dict)
    order: Dict[str, PRF] = field(default_factory=dict)
    senses: Optional[SenseReport] = None

    def to_dict(self) -> dict:
        out = {
            "slice": self.slice,
            "n_instances": self.n_instances,
            "arguments": {k: v.to_dict() for k, v in self.arguments.items()},
            "tokens": {k: v.to_dict() for k, v in self.tokens.items()},
            "order": {k: v.to_dict() for k, v in self.order.items()},
        }
        if self.senses is not None:
            out["senses"] = self.senses.to_dict()
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        prfs = lambda m: {k: PRF.from_dict(v) for k, v in m.items()}  # noqa: E731
        return cls(
            d["slice"],
            int(d["n_instances"]),
            prfs(d.get("arguments", {})),
            prfs(d.get("tokens", {})),
            prfs(d.get("order", {})),
            SenseReport.from_dict(d["senses"]) if "senses" in d else None,
        )

    def flatten(self) -> Dict[str, float]:
        """Metric cells as ``group/name/metric`` -> value (P, R, F1 only)."""
        cells = {}
        groups = [("arguments", self.arguments), ("tokens", self.tokens), ("order", self.order)]
        if self.senses is not None:
            groups.append(("senses", self.senses.per_sense))
            groups.append(("senses", {"micro": self.senses.micro, "weighted": self.senses.weighted}))
        for group, table in groups:
            for name, prf in table.items():
                for metric in ("precision", "recall", "f1"):
                    cells[f"{group}/{name}/{metric}"] = getattr(prf, metric)
        return cells


def spans_of_tags(examples: Sequence[D1Example], tags: Optional[Sequence[Sequence[str]]] = None):
    """Key -> spans for each D1 example, from gold tags or from the given predictions."""
    seqs = [ex.tags for ex in examples] if tags is None else tags
    return {ex.key: extract_spans(t) for ex, t in zip(examples, seqs)}


def argument_report(
    examples: Sequence[D1Example], pred_tags: Sequence[Sequence[str]], slice_name: str = "all"
) -> EvalReport:
    if len(examples) != len(pred_tags):
        raise EvalError("one predicted tag sequence is needed per example")
    gold = spans_of_tags(examples)
    pred = spans_of_tags(examples, pred_tags)
    return EvalReport(
        slice=slice_name,
        n_instances=len(examples),
        arguments=exact_match(gold, pred),
        tokens=token_prf([ex.tags for ex in examples], pred_tags),
        order=order_score(gold, pred),
    )


# ---------------------------------------------------------------- slices


@dataclass(frozen=True)
class SliceMeta:
    n_relations: int  # eligible relations in the source sentence
    rank: int  # position among them by leftmost argument start
    sense: Optional[SenseLabel]

    @property
    def side(self) -> str:
        return "left" if self.rank < self.n_relations / 2 else "right"


def slice_meta(examples: Sequence[D1Example]) -> Dict[Hashable, SliceMeta]:
    by_sentence: Dict[Tuple[str, int], List[D1Example]] = {}
    for ex in examples:
        if ex.source_relation is not None:
            by_sentence.setdefault(ex.sentence.key, []).append(ex)
    meta = {}
    for ex in examples:
        if ex.source_relation is None:
            meta[ex.key] = SliceMeta(0, 0, None)
            continue
        siblings = sorted(by_sentence[ex.sentence.key], key=lambda e: (e.source_relation.first_start, e.relation_index))
        rank = [e.key for e in siblings].index(ex.key)
        meta[ex.key] = SliceMeta(len(siblings), rank, ex.source_relation.sense)
    return meta


def slice_eval(
    examples: Sequence[D1Example],
    pred_tags: Sequence[Sequence[str]],
    slices: Sequence[str] = SLICE_KINDS,
    sense_threshold: int = 100,
) -> List[EvalReport]:
    """Argument reports restricted to multi-relation sentences, their left/right relations,
    and to each sense seen more than ``sense_threshold`` times."""
    unknown = set(slices) - set(SLICE_KINDS)
    if unknown:
        raise EvalError(f"unknown slice kinds {sorted(unknown)}; choose from {SLICE_KINDS}")
    meta = slice_meta(examples)
    selectors = []
    if "multi" in slices:
        selectors.append(("multi", lambda m: m.n_relations > 1))
    if "left" in slices:
        selectors.append(("multi-left", lambda m: m.n_relations > 1 and m.side == "left"))
    if "right" in slices:
        selectors.append(("multi-right", lambda m: m.n_relations > 1 and m.side == "right"))
    if "sense" in slices:
        counts: Dict[SenseLabel, int] = {}
        for m in meta.values():
            if m.sense is not None:
                counts[m.sense] = counts.get(m.sense, 0) + 1
        for s in SENSES:
            if counts.get(s, 0) > sense_threshold:
                selectors.append((f"sense:{s.value}", lambda m, s=s: m.sense == s))
    reports = []
    for name, keep in selectors:
        idx = [i for i, ex in enumerate(examples) if keep(meta[ex.key])]
        reports.append(argument_report([examples[i] for i in idx], [pred_tags[i] for i in idx], name))
    return reports


# ---------------------------------------------------------------- cross-validation


@dataclass
class CrossValSummary:
    k: int
    mean: Dict[str, float]
    std: Dict[str, float]

    def to_dict(self) -> dict:
        return {"k": self.k, "mean": self.mean, "std": self.std}

    def format(self, prefix: str = "arguments/") -> str:
        rows = [f"{'metric':<40} {'mean':>8} {'std':>8}"]
        for key in sorted(self.mean):
            if key.startswith(prefix):
                rows.append(f"{key:<40} {self.mean[key]:8.2f} {self.std[key]:8.2f}")
        return "\n".join(rows)


def crossval_aggregate(reports: Sequence[EvalReport], k: Optional[int] = None) -> CrossValSummary:
    """Mean and sample (n-1) standard deviation of every metric cell across folds."""
    if k is not None and len(reports) != k:
        raise EvalError(f"expected {k} fold reports, got {len(reports)}")
    if len(reports) < 2:
        raise EvalError("cross-validation needs at least two fold reports")
    cells = [r.flatten() for r in reports]
    schema = set(cells[0])
    for i, c in enumerate(cells[1:], start=2):
        if set(c) != schema:
            raise EvalError(f"fold {i} report has a different metric schema than fold 1")
    mean, std = {}, {}
    for key in sorted(schema):
        vals = np.array([c[key] for c in cells])
        mean[key] = float(vals.mean())
        std[key] = float(vals.std(ddof=1))
    return CrossValSummary(len(reports), mean, std)


# ---------------------------------------------------------------- text output


def _prf_row(name: str, prf: PRF, width: int = 28) -> str:
    return f"{name:<{width}} {prf.precision:7.2f} {prf.recall:7.2f} {prf.f1:7.2f} {prf.support:8d}"


def _header(first: str, width: int = 28) -> str:
    return f"{first:<{width}} {'P':>7} {'R':>7} {'F1':>7} {'support':>8}"


def format_report(report: EvalReport) -> str:
    parts = [f"[{report.slice}] instances: {report.n_instances}"]
    if report.arguments:
        parts += ["", _header("argument")] + [_prf_row(k, v) for k, v in report.arguments.items()]
    if report.tokens:
        parts += ["", _header("label")] + [_prf_row(k, v) for k, v in report.tokens.items()]
    if report.order:
        parts += ["", _header("order")] + [_prf_row(k, v) for k, v in report.order.items()]
    if report.senses is not None:
        sr = report.senses
        rows = [_prf_row(k, v, 36) for k, v in sr.per_sense.items() if v.support or v.precision]
        parts += ["", _header("sense", 36)] + rows
        parts += [_prf_row("micro avg", sr.micro, 36), _prf_row("weighted avg", sr.weighted, 36)]
    return "\n".join(parts)


def format_slices(reports: Sequence[EvalReport]) -> str:
    rows = [f"{'condition':<40} {'n':>6} {'Arg1 P':>7} {'Arg1 R':>7} {'Arg1 F1':>7} {'Arg2 P':>7} {'Arg2 R':>7} {'Arg2 F1':>7}"]
    for r in reports:
        a1, a2 = r.arguments.get("Arg1", PRF()), r.arguments.get("Arg2", PRF())
        rows.append(
            f"{r.slice:<40} {r.n_instances:6d} {a1.precision:7.2f} {a1.recall:7.2f} {a1.f1:7.2f}"
            f" {a2.precision:7.2f} {a2.recall:7.2f} {a2.f1:7.2f}"
        )
    return "\n".join(rows)


def confusion_csv(report: SenseReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["gold\\pred"] + [s.value for s in SENSES])
    for s, row in zip(SENSES, report.confusion):
        w.writerow([s.value] + [int(x) for x in row])
    return buf.getvalue()
