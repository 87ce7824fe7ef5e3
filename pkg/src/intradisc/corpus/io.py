"""JSON-lines readers and writers for corpora and derived D1/D2 datasets."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, List

from .types import (
    AnnotatedSentence,
    CorpusError,
    D1Example,
    D2Example,
    GoldRelation,
    SenseLabel,
    validate_sentence,
)


class CorpusFormatError(CorpusError):
    def __init__(self, path, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = path
        self.lineno = lineno


def _spans(raw) -> tuple:
    return tuple((int(s), int(e)) for s, e in raw)


def relation_from_dict(d: dict) -> GoldRelation:
    return GoldRelation(
        arg1_spans=_spans(d["arg1_spans"]),
        arg2_spans=_spans(d["arg2_spans"]),
        sense=SenseLabel.parse(d["sense"]),
        provenance=d.get("provenance", "Implicit"),
        linked_to_explicit=bool(d.get("linked", False)),
    )


def relation_to_dict(rel: GoldRelation) -> dict:
    return {
        "arg1_spans": [list(s) for s in rel.arg1_spans],
        "arg2_spans": [list(s) for s in rel.arg2_spans],
        "sense": rel.sense.value,
        "provenance": rel.provenance,
        "linked": rel.linked_to_explicit,
    }


def sentence_from_dict(d: dict) -> AnnotatedSentence:
    tokens = d["tokens"]
    if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
        raise CorpusError("'tokens' must be an array of strings")
    return AnnotatedSentence(
        doc_id=str(d["doc_id"]),
        sent_index=int(d["sent_index"]),
        tokens=tuple(tokens),
        parse=d.get("parse", "") or "",
        relations=tuple(relation_from_dict(r) for r in d.get("relations", [])),
    )


def sentence_to_dict(sent: AnnotatedSentence) -> dict:
    return {
        "doc_id": sent.doc_id,
        "sent_index": sent.sent_index,
        "tokens": list(sent.tokens),
        "parse": sent.parse,
        "relations": [relation_to_dict(r) for r in sent.relations],
    }


def _read_jsonl(path) -> Iterable[tuple]:
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(path, lineno, f"invalid JSON ({exc.msg})") from None


def load_corpus(path) -> List[AnnotatedSentence]:
    """Read and validate a corpus file, one sentence object per line."""
    out = []
    for lineno, obj in _read_jsonl(path):
        try:
            sent = sentence_from_dict(obj)
        except (KeyError, TypeError, ValueError) as exc:
            msg = f"missing key {exc}" if isinstance(exc, KeyError) else str(exc)
            raise CorpusFormatError(path, lineno, msg) from None
        validate_sentence(sent)
        out.append(sent)
    return out


def save_corpus(path, corpus: Iterable[AnnotatedSentence]) -> None:
    _write_jsonl(path, (sentence_to_dict(s) for s in corpus))


def _write_jsonl(path, records: Iterable[dict]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")


def d1_to_dict(ex: D1Example) -> dict:
    d = sentence_to_dict(ex.sentence)
    d["tags"] = list(ex.tags)
    d["relation_index"] = ex.relation_index
    return d


def d1_from_dict(d: dict) -> D1Example:
    sent = sentence_from_dict(d)
    idx = int(d.get("relation_index", -1))
    if idx >= len(sent.relations):
        raise ValueError(f"relation_index {idx} but only {len(sent.relations)} relations")
    rel = sent.relations[idx] if idx >= 0 else None
    return D1Example(sent, tuple(d["tags"]), rel, idx)


def d2_to_dict(ex: D2Example) -> dict:
    return {
        "doc_id": ex.doc_id,
        "sent_index": ex.sent_index,
        "relation_index": ex.relation_index,
        "arg1_tokens": list(ex.arg1_tokens),
        "arg2_tokens": list(ex.arg2_tokens),
        "arg1_spans": [list(s) for s in ex.arg1_spans],
        "arg2_spans": [list(s) for s in ex.arg2_spans],
        "parse": ex.parse,
        "sense": ex.sense.value,
    }


def d2_from_dict(d: dict) -> D2Example:
    return D2Example(
        arg1_tokens=tuple(d["arg1_tokens"]),
        arg2_tokens=tuple(d["arg2_tokens"]),
        parse=d.get("parse", ""),
        sense=SenseLabel.parse(d["sense"]),
        doc_id=str(d.get("doc_id", "")),
        sent_index=int(d.get("sent_index", 0)),
        arg1_spans=_spans(d.get("arg1_spans", [])),
        arg2_spans=_spans(d.get("arg2_spans", [])),
        relation_index=int(d.get("relation_index", 0)),
    )


def save_d1(path, examples: Iterable[D1Example]) -> None:
    _write_jsonl(path, (d1_to_dict(e) for e in examples))


def load_d1(path) -> List[D1Example]:
    out = []
    for lineno, obj in _read_jsonl(path):
        try:
            out.append(d1_from_dict(obj))
        except (KeyError, TypeError, ValueError) as exc:
            raise CorpusFormatError(path, lineno, str(exc)) from None
    return out


def save_d2(path, examples: Iterable[D2Example]) -> None:
    _write_jsonl(path, (d2_to_dict(e) for e in examples))


def load_d2(path) -> List[D2Example]:
    out = []
    for lineno, obj in _read_jsonl(path):
        try:
            out.append(d2_from_dict(obj))
        except (KeyError, TypeError, ValueError) as exc:
            raise CorpusFormatError(path, lineno, str(exc)) from None
    return out
