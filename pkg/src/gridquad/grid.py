"""Entity/relation grid tagging: encode quadruples into two n x n label grids and back."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import Document, Quadruple, Span, sorted_quads

ENTITY_LABELS = ("tgt", "asp", "opin", "none")
RELATION_LABELS = ("rel", "pos", "neg", "none")
TGT, ASP, OPIN, E_NONE = range(4)
REL, POS, NEG, R_NONE = range(4)

_ROLE_LABEL = {"target": TGT, "aspect": ASP, "opinion": OPIN}
_SENTIMENT_LABEL = {"pos": POS, "neg": NEG}
_LABEL_SENTIMENT = {POS: "pos", NEG: "neg"}

ENTITY_CODES = {TGT: "T", ASP: "A", OPIN: "O", E_NONE: "."}
RELATION_CODES = {REL: "R", POS: "+", NEG: "-", R_NONE: "."}


class EncodingError(ValueError):
    pass


@dataclass(frozen=True)
class EntityGrid:
    labels: np.ndarray

    def __post_init__(self):
        self.labels.setflags(write=False)

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    def cells(self) -> dict[tuple[int, int], str]:
        return {(int(i), int(j)): ENTITY_LABELS[self.labels[i, j]]
                for i, j in zip(*np.nonzero(self.labels != E_NONE))}


@dataclass(frozen=True)
class RelationGrid:
    labels: np.ndarray

    def __post_init__(self):
        self.labels.setflags(write=False)

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    def cells(self) -> dict[tuple[int, int], str]:
        return {(int(i), int(j)): RELATION_LABELS[self.labels[i, j]]
                for i, j in zip(*np.nonzero(self.labels != R_NONE))}


def _roles(q: Quadruple):
    yield "target", q.target
    if q.aspect is not None:
        yield "aspect", q.aspect
    yield "opinion", q.opinion


def _entity_conflicts(doc: Document) -> list[str]:
    seen: dict[tuple[int, int], tuple[str, Span]] = {}
    out = []
    for q in sorted_quads(doc.quadruples):
        for role, span in _roles(q):
            cell = (span.head, span.last)
            if cell in seen and seen[cell][0] != role:
                other_role, other = seen[cell]
                out.append(f"entity cell {cell}: {other_role} [{other.begin},{other.end}) "
                           f"vs {role} [{span.begin},{span.end})")
            seen.setdefault(cell, (role, span))
    return out


def _sentiment_conflicts(doc: Document) -> list[str]:
    by_pair: dict[tuple[int, int], set[str]] = {}
    null_pairs, aspect_pairs = set(), set()
    for q in doc.quadruples:
        pair = (q.target.head, q.opinion.head)
        by_pair.setdefault(pair, set()).add(q.sentiment)
        (null_pairs if q.aspect is None else aspect_pairs).add(pair)
    out = [f"sentiment cell {pair}: both pos and neg"
           for pair, s in sorted(by_pair.items()) if len(s) > 1]
    out += [f"sentiment cell {pair}: null-aspect and aspect-bearing quadruples coexist"
            for pair in sorted(null_pairs & aspect_pairs)]
    return out


def _fill(doc: Document) -> tuple[np.ndarray, np.ndarray]:
    n = doc.n
    ent = np.full((n, n), E_NONE, dtype=np.int8)
    rel = np.full((n, n), R_NONE, dtype=np.int8)
    for q in doc.quadruples:
        for role, span in _roles(q):
            ent[span.head, span.last] = _ROLE_LABEL[role]
    for q in doc.quadruples:
        if q.aspect is not None:
            rel[q.target.head, q.aspect.head] = REL
            rel[q.aspect.head, q.opinion.head] = REL
    # Sentiment cells are written last; a collision with a rel cell is caught
    # by the round-trip comparison in check_representable.
    for q in doc.quadruples:
        rel[q.target.head, q.opinion.head] = _SENTIMENT_LABEL[q.sentiment]
    return ent, rel


@dataclass
class RepresentabilityReport:
    conflicts: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.conflicts

    def __bool__(self) -> bool:
        return self.ok


def check_representable(doc: Document) -> RepresentabilityReport:
    """List every reason the document's quadruples would not survive encode/decode."""
    conflicts = _entity_conflicts(doc) + _sentiment_conflicts(doc)
    if not conflicts:
        ent, rel = _fill(doc)
        decoded = decode_quadruples(EntityGrid(ent), RelationGrid(rel))
        gold = set(doc.quadruples)
        for q in sorted_quads(decoded - gold):
            conflicts.append(f"spurious quadruple on decode: {q.to_dict()}")
        for q in sorted_quads(gold - decoded):
            conflicts.append(f"quadruple lost on decode: {q.to_dict()}")
    return RepresentabilityReport(conflicts)


def encode_grids(doc: Document) -> tuple[EntityGrid, RelationGrid]:
    report = check_representable(doc)
    if not report.ok:
        raise EncodingError(f"document {doc.doc_id!r} is not grid-representable: "
                            + "; ".join(report.conflicts))
    ent, rel = _fill(doc)
    return EntityGrid(ent), RelationGrid(rel)


@dataclass
class DecodeTrace:
    dropped: list[str] = field(default_factory=list)

    def drop(self, msg: str) -> None:
        self.dropped.append(msg)


class DecodeResult(frozenset):
    """Decoded quadruple set that also carries the trace of discarded cells."""

    trace: DecodeTrace

    def __new__(cls, quads, trace: DecodeTrace):
        obj = super().__new__(cls, quads)
        obj.trace = trace
        return obj


def decode_quadruples(eg: EntityGrid | np.ndarray, rg: RelationGrid | np.ndarray) -> DecodeResult:
    ent = eg.labels if isinstance(eg, EntityGrid) else np.asarray(eg)
    rel = rg.labels if isinstance(rg, RelationGrid) else np.asarray(rg)
    if ent.shape != rel.shape or ent.ndim != 2 or ent.shape[0] != ent.shape[1]:
        raise ValueError(f"grid shapes differ or are not square: {ent.shape} vs {rel.shape}")
    trace = DecodeTrace()

    spans: dict[int, dict[int, list[Span]]] = {TGT: {}, ASP: {}, OPIN: {}}
    for h, t in zip(*np.nonzero(ent != E_NONE)):
        h, t, lab = int(h), int(t), int(ent[h, t])
        if h > t:
            trace.drop(f"entity cell ({h},{t}) {ENTITY_LABELS[lab]} below the diagonal")
            continue
        spans[lab].setdefault(h, []).append(Span(h, t + 1))

    quads = set()
    aspect_heads = sorted(spans[ASP])
    for i, j in zip(*np.nonzero((rel == POS) | (rel == NEG))):
        i, j = int(i), int(j)
        sentiment = _LABEL_SENTIMENT[int(rel[i, j])]
        if i not in spans[TGT] or j not in spans[OPIN]:
            trace.drop(f"sentiment cell ({i},{j}) {sentiment}: row is not a target head "
                       f"or column is not an opinion head")
            continue
        bridges = [k for k in aspect_heads if rel[i, k] == REL and rel[k, j] == REL]
        for t in spans[TGT][i]:
            for o in spans[OPIN][j]:
                if not bridges:
                    quads.add(Quadruple(t, None, o, sentiment))
                for k in bridges:
                    for a in spans[ASP][k]:
                        quads.add(Quadruple(t, a, o, sentiment))
    return DecodeResult(quads, trace)


def dump_grids(eg: EntityGrid, rg: RelationGrid) -> str:
    """Plain-text debugging dump: entity grid, blank line, relation grid."""
    rows = ["".join(ENTITY_CODES[int(c)] for c in row) for row in eg.labels]
    rows.append("")
    rows += ["".join(RELATION_CODES[int(c)] for c in row) for row in rg.labels]
    return "\n".join(rows) + "\n"
