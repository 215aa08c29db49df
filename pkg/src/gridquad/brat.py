"""BRAT standoff (.ann) parsing, conversion to documents, corpus splitting and Cohen's kappa."""

from __future__ import annotations

import re
from collections import Counter
from fractions import Fraction
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import Document, Quadruple, Span

ENTITY_TAGS = ("TAR", "ASP", "OPIN")
RELATION_TAGS = ("TAR-ASP", "ASP-OPIN", "POS", "NEG")
# Required (arg1 tag, arg2 tag) per relation tag.
RELATION_SIGNATURE = {
    "TAR-ASP": ("TAR", "ASP"),
    "ASP-OPIN": ("ASP", "OPIN"),
    "POS": ("TAR", "OPIN"),
    "NEG": ("TAR", "OPIN"),
}

_ENTITY_LINE = re.compile(r"^(T\d+)\t(\S+) (\d+) (\d+)\t(.*)$")
_RELATION_LINE = re.compile(r"^(R\d+)\t(\S+) Arg1:(T\d+) Arg2:(T\d+)\s*$")


class AnnError(ValueError):
    """Base class for .ann problems."""


class AnnParseError(AnnError):
    def __init__(self, lineno: int, line: str, reason: str):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {reason}: {line!r}")


class AnnIntegrityError(AnnError):
    pass


class AnnSchemaError(AnnError):
    pass


class AlignmentError(AnnError):
    pass


class ContradictionError(AnnError):
    pass


@dataclass(frozen=True)
class AnnEntity:
    tag: str
    begin: int
    end: int
    surface: str


@dataclass(frozen=True)
class AnnRelation:
    tag: str
    arg1: str
    arg2: str


@dataclass
class AnnGraph:
    entities: dict = field(default_factory=dict)
    relations: dict = field(default_factory=dict)


def _id_key(ident: str) -> tuple:
    return (ident[0], int(ident[1:]))


def parse_ann(ann_text: str, doc_text: str) -> AnnGraph:
    graph = AnnGraph()
    pending = []
    for lineno, raw in enumerate(ann_text.splitlines(), 1):
        line = raw.rstrip("\r")
        if not line.strip():
            continue
        if line.startswith("T"):
            m = _ENTITY_LINE.match(line)
            if not m:
                raise AnnParseError(lineno, line, "malformed entity line")
            ident, tag, b, e, surface = m.groups()
            if tag not in ENTITY_TAGS:
                raise AnnSchemaError(f"line {lineno}: unknown entity tag {tag!r}")
            b, e = int(b), int(e)
            if not (0 <= b < e <= len(doc_text)):
                raise AnnIntegrityError(f"line {lineno}: offsets {b}..{e} outside text of length {len(doc_text)}")
            if doc_text[b:e] != surface:
                raise AnnIntegrityError(
                    f"line {lineno}: surface {surface!r} does not match text[{b}:{e}]={doc_text[b:e]!r}")
            if ident in graph.entities:
                raise AnnParseError(lineno, line, f"duplicate id {ident}")
            graph.entities[ident] = AnnEntity(tag, b, e, surface)
        elif line.startswith("R"):
            m = _RELATION_LINE.match(line)
            if not m:
                raise AnnParseError(lineno, line, "malformed relation line")
            ident, tag, a1, a2 = m.groups()
            if tag not in RELATION_TAGS:
                raise AnnSchemaError(f"line {lineno}: unknown relation tag {tag!r}")
            if ident in graph.relations:
                raise AnnParseError(lineno, line, f"duplicate id {ident}")
            pending.append((lineno, ident, tag, a1, a2))
        else:
            raise AnnParseError(lineno, line, "unknown annotation kind")

    # Relations may precede the entities they reference, so check args last.
    for lineno, ident, tag, a1, a2 in pending:
        for arg in (a1, a2):
            if arg not in graph.entities:
                raise AnnSchemaError(f"line {lineno}: relation {ident} references missing entity {arg}")
        want = RELATION_SIGNATURE[tag]
        got = (graph.entities[a1].tag, graph.entities[a2].tag)
        if got != want:
            raise AnnSchemaError(f"line {lineno}: {tag} must link {want[0]}->{want[1]}, got {got[0]}->{got[1]}")
        graph.relations[ident] = AnnRelation(tag, a1, a2)
    return graph


def serialize_ann(graph: AnnGraph) -> str:
    lines = []
    for ident in sorted(graph.entities, key=_id_key):
        e = graph.entities[ident]
        lines.append(f"{ident}\t{e.tag} {e.begin} {e.end}\t{e.surface}")
    for ident in sorted(graph.relations, key=_id_key):
        r = graph.relations[ident]
        lines.append(f"{ident}\t{r.tag} Arg1:{r.arg1} Arg2:{r.arg2}")
    return "\n".join(lines) + ("\n" if lines else "")


def _token_span(ent: AnnEntity, ident: str, offsets: Sequence[tuple[int, int]]) -> Span:
    starts = {b: k for k, (b, _) in enumerate(offsets)}
    ends = {e: k for k, (_, e) in enumerate(offsets)}
    if ent.begin not in starts or ent.end not in ends or starts[ent.begin] > ends[ent.end]:
        raise AlignmentError(
            f"entity {ident} ({ent.tag} {ent.begin}..{ent.end} {ent.surface!r}) does not align with token boundaries")
    return Span(starts[ent.begin], ends[ent.end] + 1)


def ann_to_document(graph: AnnGraph, doc_id: str, lang: str, text: str,
                    tokens: Sequence[str], offsets: Sequence[tuple[int, int]],
                    pos: Sequence[str], deps, sentences: Sequence[Span] | None = None) -> Document:
    """Assemble quadruples from sentiment arcs plus any completing aspect chains."""
    spans = {ident: _token_span(ent, ident, offsets) for ident, ent in graph.entities.items()}

    target_aspect = set()
    aspect_opinion = set()
    sentiment: dict[tuple[str, str], str] = {}
    for ident in sorted(graph.relations, key=_id_key):
        r = graph.relations[ident]
        if r.tag == "TAR-ASP":
            target_aspect.add((r.arg1, r.arg2))
        elif r.tag == "ASP-OPIN":
            aspect_opinion.add((r.arg1, r.arg2))
        else:
            s = r.tag.lower()
            prev = sentiment.get((r.arg1, r.arg2))
            if prev is not None and prev != s:
                raise ContradictionError(
                    f"{doc_id}: both POS and NEG annotated between {r.arg1} and {r.arg2}")
            sentiment[(r.arg1, r.arg2)] = s

    aspects = sorted((k for k, e in graph.entities.items() if e.tag == "ASP"), key=_id_key)
    quads = set()
    for (t, o), s in sentiment.items():
        chain = [a for a in aspects if (t, a) in target_aspect and (a, o) in aspect_opinion]
        if not chain:
            quads.add(Quadruple(spans[t], None, spans[o], s))
        for a in chain:
            quads.add(Quadruple(spans[t], spans[a], spans[o], s))

    if sentences is None:
        sentences = (Span(0, len(tokens)),) if tokens else ()
    return Document(doc_id, lang, text, tuple(tokens), tuple(sentences), tuple(pos),
                    tuple(deps), frozenset(quads))


def read_token_sidecar(path) -> tuple[list[tuple[int, int]], list[str], list, list[Span]]:
    """Read a token sidecar file.

    One token per line: ``begin end [POS [head deprel]]`` with ``head`` a
    0-based document token index (``-1`` for a root).  Blank lines end a
    sentence.  Returns offsets, POS tags, dependency edges and sentence spans.
    """
    offsets, pos, heads, sentences = [], [], [], []
    start = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            cols = line.split()
            if not cols:
                if len(offsets) > start:
                    sentences.append(Span(start, len(offsets)))
                    start = len(offsets)
                continue
            if len(cols) not in (2, 3, 5):
                raise AnnParseError(lineno, line.rstrip("\n"), "expected 'begin end [POS [head deprel]]'")
            offsets.append((int(cols[0]), int(cols[1])))
            pos.append(cols[2] if len(cols) > 2 else "X")
            if len(cols) == 5 and int(cols[3]) >= 0:
                heads.append((int(cols[3]), len(offsets) - 1, cols[4]))
    if len(offsets) > start:
        sentences.append(Span(start, len(offsets)))
    return offsets, pos, heads, sentences


def convert_pair(txt_path, ann_path, tok_path, lang: str) -> Document:
    text = Path(txt_path).read_text(encoding="utf-8")
    graph = parse_ann(Path(ann_path).read_text(encoding="utf-8"), text)
    offsets, pos, deps, sentences = read_token_sidecar(tok_path)
    tokens = [text[b:e] for b, e in offsets]
    return ann_to_document(graph, Path(txt_path).stem, lang, text, tokens, offsets, pos, deps, sentences)


# --------------------------------------------------------------------------
# splitting

def split_corpus(corpus: Sequence, ratios: tuple[float, float, float], seed: int):
    """Seeded shuffle, then contiguous cuts at floor(N*r_train) and floor(N*(r_train+r_dev))."""
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise ValueError(f"ratios must be three positive numbers, got {ratios}")
    # Exact rational arithmetic: 0.8 * 10 must floor to 8, not 7.
    r = [Fraction(x).limit_denominator(10**6) for x in ratios]
    total = sum(r)
    n = len(corpus)
    cut1 = int(n * r[0] / total)
    cut2 = int(n * (r[0] + r[1]) / total)
    order = np.random.default_rng(seed).permutation(n)
    items = [corpus[int(k)] for k in order]
    return items[:cut1], items[cut1:cut2], items[cut2:]


def parse_ratio(text: str) -> tuple[float, float, float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"ratio must look like a:b:c, got {text!r}")
    return tuple(float(p) for p in parts)


# --------------------------------------------------------------------------
# agreement

class UndefinedKappaError(ZeroDivisionError):
    pass


def cohen_kappa(p_o: float, p_e: float) -> float:
    if not (0.0 <= p_o <= 1.0) or not (0.0 <= p_e <= 1.0):
        raise ValueError(f"agreement fractions must lie in [0, 1]: p_o={p_o}, p_e={p_e}")
    if p_e == 1.0:
        raise UndefinedKappaError("chance agreement is 1; kappa is undefined")
    return (p_o - p_e) / (1.0 - p_e)


@dataclass(frozen=True)
class Agreement:
    p_o: float
    p_e: float
    kappa: float


def agreement_from_labels(a: Sequence, b: Sequence) -> Agreement:
    if len(a) != len(b):
        raise ValueError(f"annotators labelled different item counts: {len(a)} vs {len(b)}")
    if not a:
        raise ValueError("no paired labels")
    n = len(a)
    p_o = sum(x == y for x, y in zip(a, b)) / n
    ca, cb = Counter(a), Counter(b)
    p_e = sum((ca[c] / n) * (cb[c] / n) for c in set(ca) | set(cb))
    return Agreement(p_o, p_e, cohen_kappa(p_o, p_e))


def cohen_kappa_from_labels(layers: Mapping[str, tuple[Sequence, Sequence]]) -> dict[str, Agreement]:
    """Per-layer agreement; ``layers`` maps a layer name to (annotator A labels, annotator B labels)."""
    return {name: agreement_from_labels(a, b) for name, (a, b) in layers.items()}
