"""Document model, corpus file I/O, validation and corpus analytics."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

SENTIMENTS = ("pos", "neg")
ROLES = ("T", "A", "O")
RELATIONS = ("TA", "TO", "AO")


@dataclass(frozen=True, order=True)
class Span:
    begin: int
    end: int

    def __len__(self) -> int:
        return self.end - self.begin

    @property
    def head(self) -> int:
        return self.begin

    @property
    def last(self) -> int:
        return self.end - 1

    def to_list(self) -> list[int]:
        return [self.begin, self.end]


@dataclass(frozen=True, order=True)
class Quadruple:
    target: Span
    aspect: Optional[Span]
    opinion: Span
    sentiment: str

    def key(self) -> tuple:
        # Total ordering that tolerates a missing aspect.
        a = (-1, -1) if self.aspect is None else (self.aspect.begin, self.aspect.end)
        return (self.target.begin, self.target.end, *a,
                self.opinion.begin, self.opinion.end, self.sentiment)

    def to_dict(self) -> dict:
        return {
            "target": self.target.to_list(),
            "aspect": None if self.aspect is None else self.aspect.to_list(),
            "opinion": self.opinion.to_list(),
            "sentiment": self.sentiment,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Quadruple":
        aspect = d.get("aspect")
        return cls(Span(*d["target"]), None if aspect is None else Span(*aspect),
                   Span(*d["opinion"]), d["sentiment"])


def sorted_quads(quads: Iterable[Quadruple]) -> list[Quadruple]:
    return sorted(quads, key=Quadruple.key)


@dataclass(frozen=True)
class Document:
    doc_id: str
    lang: str
    text: str
    tokens: tuple[str, ...]
    sentences: tuple[Span, ...]
    pos: tuple[str, ...]
    deps: tuple[tuple[int, int, str], ...]
    quadruples: frozenset[Quadruple] = field(default_factory=frozenset)

    def __post_init__(self):
        # Normalise list inputs so documents stay hashable and immutable.
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "sentences", tuple(self.sentences))
        object.__setattr__(self, "pos", tuple(self.pos))
        object.__setattr__(self, "deps", tuple(tuple(e) for e in self.deps))
        object.__setattr__(self, "quadruples", frozenset(self.quadruples))

    @property
    def n(self) -> int:
        return len(self.tokens)

    def sentence_of(self, token: int) -> int:
        for k, s in enumerate(self.sentences):
            if s.begin <= token < s.end:
                return k
        raise IndexError(f"token {token} outside every sentence of {self.doc_id}")

    def with_quadruples(self, quads: Iterable[Quadruple]) -> "Document":
        return Document(self.doc_id, self.lang, self.text, self.tokens, self.sentences,
                        self.pos, self.deps, frozenset(quads))

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "lang": self.lang,
            "text": self.text,
            "tokens": list(self.tokens),
            "sentences": [s.to_list() for s in self.sentences],
            "pos": list(self.pos),
            "deps": [[i, j, lab] for i, j, lab in self.deps],
            "quadruples": [q.to_dict() for q in sorted_quads(self.quadruples)],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Document":
        return cls(
            doc_id=d["doc_id"],
            lang=d["lang"],
            text=d["text"],
            tokens=tuple(d["tokens"]),
            sentences=tuple(Span(*s) for s in d["sentences"]),
            pos=tuple(d["pos"]),
            deps=tuple((int(i), int(j), str(lab)) for i, j, lab in d["deps"]),
            quadruples=frozenset(Quadruple.from_dict(q) for q in d["quadruples"]),
        )


# --------------------------------------------------------------------------
# corpus files: one JSON object per line

def dumps_document(doc: Document) -> str:
    return json.dumps(doc.to_dict(), ensure_ascii=False, sort_keys=False)


def write_corpus(path, docs: Iterable[Document]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc in docs:
            fh.write(dumps_document(doc))
            fh.write("\n")


def read_corpus(path) -> list[Document]:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                docs.append(Document.from_dict(json.loads(line)))
            except (KeyError, TypeError, ValueError) as exc:
                raise CorpusError(f"{Path(path).name}:{lineno}: bad document record ({exc})") from exc
    return docs


# --------------------------------------------------------------------------
# validation

class CorpusError(ValueError):
    pass


class InvalidDocumentError(CorpusError):
    def __init__(self, doc_id: str, violations: list["Violation"]):
        self.doc_id = doc_id
        self.violations = violations
        detail = "; ".join(f"{v.code}: {v.message}" for v in violations)
        super().__init__(f"document {doc_id!r} is invalid: {detail}")


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


def validate_document(doc: Document) -> list[Violation]:
    """Return every invariant violation of ``doc``; an empty list means valid."""
    out: list[Violation] = []
    n = doc.n
    if len(doc.pos) != n:
        out.append(Violation("POS_LEN_MISMATCH", f"{len(doc.pos)} POS tags for {n} tokens"))

    expected = 0
    for k, s in enumerate(doc.sentences):
        if s.begin != expected or s.end <= s.begin:
            out.append(Violation("SENTENCE_PARTITION",
                                 f"sentence {k} is [{s.begin},{s.end}), expected to start at {expected}"))
            break
        expected = s.end
    else:
        if expected != n:
            out.append(Violation("SENTENCE_PARTITION", f"sentences cover [0,{expected}) of {n} tokens"))

    for i, j, label in doc.deps:
        if i == j:
            out.append(Violation("DEP_SELF_LOOP", f"edge ({i},{j},{label}) joins a token to itself"))
        elif not (0 <= i < n and 0 <= j < n):
            out.append(Violation("DEP_OUT_OF_RANGE", f"edge ({i},{j},{label}) outside [0,{n})"))

    for q in sorted_quads(doc.quadruples):
        if q.sentiment not in SENTIMENTS:
            out.append(Violation("BAD_SENTIMENT", f"sentiment {q.sentiment!r}"))
        for role, span in (("target", q.target), ("aspect", q.aspect), ("opinion", q.opinion)):
            if span is None:
                continue
            if not (0 <= span.begin < span.end <= n):
                out.append(Violation("SPAN_OUT_OF_RANGE",
                                     f"{role} [{span.begin},{span.end}) outside [0,{n})"))
    return out


def require_valid(docs: Iterable[Document]) -> None:
    for doc in docs:
        problems = validate_document(doc)
        if problems:
            raise InvalidDocumentError(doc.doc_id, problems)


# --------------------------------------------------------------------------
# statistics

@dataclass
class CorpusStats:
    doc_count: int = 0
    sentence_count: int = 0
    token_count: int = 0
    entity_counts: dict = field(default_factory=lambda: dict.fromkeys(ROLES, 0))
    relation_counts: dict = field(default_factory=lambda: dict.fromkeys(RELATIONS, 0))
    quad_count: int = 0
    sentiment_counts: dict = field(default_factory=lambda: dict.fromkeys(SENTIMENTS, 0))

    def __add__(self, other: "CorpusStats") -> "CorpusStats":
        return CorpusStats(
            self.doc_count + other.doc_count,
            self.sentence_count + other.sentence_count,
            self.token_count + other.token_count,
            {k: self.entity_counts[k] + other.entity_counts[k] for k in ROLES},
            {k: self.relation_counts[k] + other.relation_counts[k] for k in RELATIONS},
            self.quad_count + other.quad_count,
            {k: self.sentiment_counts[k] + other.sentiment_counts[k] for k in SENTIMENTS},
        )

    def to_dict(self) -> dict:
        return {
            "doc_count": self.doc_count,
            "sentence_count": self.sentence_count,
            "token_count": self.token_count,
            "entity_counts": dict(self.entity_counts),
            "relation_counts": dict(self.relation_counts),
            "quad_count": self.quad_count,
            "sentiment_counts": dict(self.sentiment_counts),
        }


def entity_sets(quads: Iterable[Quadruple]) -> dict[str, set[Span]]:
    ents: dict[str, set[Span]] = {r: set() for r in ROLES}
    for q in quads:
        ents["T"].add(q.target)
        ents["O"].add(q.opinion)
        if q.aspect is not None:
            ents["A"].add(q.aspect)
    return ents


def relation_sets(quads: Iterable[Quadruple]) -> dict[str, set[tuple[Span, Span]]]:
    rels: dict[str, set] = {r: set() for r in RELATIONS}
    for q in quads:
        rels["TO"].add((q.target, q.opinion))
        if q.aspect is not None:
            rels["TA"].add((q.target, q.aspect))
            rels["AO"].add((q.aspect, q.opinion))
    return rels


def document_stats(doc: Document) -> CorpusStats:
    ents = entity_sets(doc.quadruples)
    rels = relation_sets(doc.quadruples)
    senti = Counter(q.sentiment for q in doc.quadruples)
    return CorpusStats(
        doc_count=1,
        sentence_count=len(doc.sentences),
        token_count=doc.n,
        entity_counts={r: len(ents[r]) for r in ROLES},
        relation_counts={r: len(rels[r]) for r in RELATIONS},
        quad_count=len(doc.quadruples),
        sentiment_counts={s: senti.get(s, 0) for s in SENTIMENTS},
    )


def corpus_stats(corpus: Sequence[Document]) -> CorpusStats:
    require_valid(corpus)
    total = CorpusStats()
    for doc in corpus:
        total = total + document_stats(doc)
    return total


# --------------------------------------------------------------------------
# distribution analysis

LENGTH_BINS = ("<10",) + tuple(f"{lo}-{lo + 9}" for lo in range(10, 100, 10)) + ("100-139",)
# "0" holds quadruple-free documents so the histogram always sums to the doc count.
QUAD_BINS = tuple(str(k) for k in range(0, 10)) + ("10+",)


def length_bin(n_tokens: int) -> str:
    if n_tokens < 10:
        return "<10"
    if n_tokens >= 100:
        # Documents beyond 139 tokens are folded into the last group.
        return "100-139"
    lo = (n_tokens // 10) * 10
    return f"{lo}-{lo + 9}"


def quad_bin(n_quads: int) -> str:
    return "10+" if n_quads >= 10 else str(n_quads)


@dataclass
class AnalysisReport:
    doc_length_histogram: dict
    quad_count_histogram: dict
    cross_sentence_ratio: dict
    cross_sentence_counts: dict
    relation_totals: dict

    def to_dict(self) -> dict:
        return {
            "doc_length_histogram": dict(self.doc_length_histogram),
            "quad_count_histogram": dict(self.quad_count_histogram),
            "cross_sentence_ratio": dict(self.cross_sentence_ratio),
            "cross_sentence_counts": dict(self.cross_sentence_counts),
            "relation_totals": dict(self.relation_totals),
        }


def cross_sentence_counts(doc: Document) -> tuple[dict, dict]:
    """Per relation type: (number crossing a sentence boundary, total)."""
    rels = relation_sets(doc.quadruples)
    cross = {}
    total = {}
    for r in RELATIONS:
        total[r] = len(rels[r])
        cross[r] = sum(doc.sentence_of(a.head) != doc.sentence_of(b.head) for a, b in rels[r])
    return cross, total


def distribution_analysis(corpus: Sequence[Document]) -> AnalysisReport:
    require_valid(corpus)
    lengths = dict.fromkeys(LENGTH_BINS, 0)
    quads = dict.fromkeys(QUAD_BINS, 0)
    cross = dict.fromkeys(RELATIONS, 0)
    total = dict.fromkeys(RELATIONS, 0)
    for doc in corpus:
        lengths[length_bin(doc.n)] += 1
        quads[quad_bin(len(doc.quadruples))] += 1
        c, t = cross_sentence_counts(doc)
        for r in RELATIONS:
            cross[r] += c[r]
            total[r] += t[r]
    ratio = {r: (cross[r] / total[r] if total[r] else 0.0) for r in RELATIONS}
    return AnalysisReport(lengths, quads, ratio, cross, total)
