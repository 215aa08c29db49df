"""Seeded synthetic review corpora with planted quadruples and bookkeeping.

Each document reviews a single target mentioned in its first sentence.  Every
quadruple owns a fresh opinion phrase and (unless the aspect is planted as
missing) a fresh aspect phrase; its aspect/opinion group either shares the
target's sentence or sits in a later sentence, which makes the target links
cross-sentence.  The dependency tree is random in its filler attachments but
always attaches span tokens to their span head, an opinion head to its aspect
head and an aspect head to the target head, so the tree carries the pairing
structure the relation grid needs.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .corpus import RELATIONS, CorpusStats, Document, Quadruple, Span

# Universal 12-tag POS inventory.
POS_TAGS = ("ADJ", "ADP", "ADV", "CONJ", "DET", "NOUN", "NUM", "PRON", "PRT", "PUNCT", "VERB", "X")
_FILLER_TAGS = ("ADP", "ADV", "CONJ", "DET", "NUM", "PRON", "PRT", "VERB", "X")


class GenerationError(ValueError):
    pass


@dataclass
class GenSpec:
    doc_count: int = 100
    vocab_sizes: dict = field(default_factory=lambda: {
        "target": 20, "aspect": 60, "opinion": 60, "continuation": 12, "filler": 200})
    doc_length: tuple = (10, 60)
    quads_per_doc: tuple = (1, 6)
    cross_sentence_fraction: float = 0.3
    null_aspect_fraction: float = 0.2
    positive_fraction: float = 0.67
    max_span_len: int = 2
    lang: str = "syn"

    @classmethod
    def from_dict(cls, d: dict) -> "GenSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise GenerationError(f"unknown generator spec keys: {sorted(unknown)}")
        kw = dict(d)
        if "vocab_sizes" in kw:
            kw["vocab_sizes"] = {**cls().vocab_sizes, **kw["vocab_sizes"]}
        for key in ("doc_length", "quads_per_doc"):
            if key in kw:
                kw[key] = tuple(kw[key])
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "GenSpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def validate(self) -> None:
        lo, hi = self.doc_length
        qlo, qhi = self.quads_per_doc
        if self.doc_count < 0:
            raise GenerationError("doc_count must be >= 0")
        if not (1 <= lo <= hi):
            raise GenerationError(f"doc_length range {self.doc_length} is empty or non-positive")
        if not (0 <= qlo <= qhi):
            raise GenerationError(f"quads_per_doc range {self.quads_per_doc} is empty")
        for name in ("cross_sentence_fraction", "null_aspect_fraction", "positive_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise GenerationError(f"{name}={v} is outside [0, 1]")
        if self.max_span_len < 1:
            raise GenerationError("max_span_len must be >= 1")
        for role in ("target", "aspect", "opinion", "filler"):
            if self.vocab_sizes.get(role, 0) < 1:
                raise GenerationError(f"vocab size for {role!r} must be >= 1")
        if self.vocab_sizes["opinion"] < 2:
            raise GenerationError("opinion vocabulary needs at least one positive and one negative word")
        if self.max_span_len > 1 and self.vocab_sizes.get("continuation", 0) < 1:
            raise GenerationError("multi-token spans need a continuation vocabulary")


@dataclass
class PlantedTruth:
    stats: CorpusStats
    cross_sentence_counts: dict
    relation_totals: dict

    @property
    def cross_sentence_ratio(self) -> dict:
        return {r: (self.cross_sentence_counts[r] / self.relation_totals[r]
                    if self.relation_totals[r] else 0.0) for r in RELATIONS}


@dataclass
class SyntheticCorpus:
    documents: list
    truth: PlantedTruth


def _vocab(prefix: str, size: int) -> list[str]:
    return [f"{prefix}{k:03d}" for k in range(size)]


def _minimum_length(n_quads: int, n_aspects: int, n_sentences: int) -> int:
    # target + one opinion token per quad + one aspect token per aspect + one
    # punctuation mark per sentence
    return 1 + n_quads + n_aspects + n_sentences


def _choose_exact(rng: np.random.Generator, total: int, fraction: float) -> np.ndarray:
    mask = np.zeros(total, dtype=bool)
    k = int(round(fraction * total))
    if k:
        mask[rng.choice(total, size=k, replace=False)] = True
    return mask


def synthesize(spec: GenSpec | dict, seed: int) -> SyntheticCorpus:
    spec = GenSpec.from_dict(spec) if isinstance(spec, dict) else spec
    spec.validate()
    rng = np.random.default_rng(seed)

    vs = spec.vocab_sizes
    targets = _vocab("tar", vs["target"])
    aspects = _vocab("asp", vs["aspect"])
    n_pos = max(1, vs["opinion"] // 2)
    opinions_pos = _vocab("pop", n_pos)
    opinions_neg = _vocab("nop", vs["opinion"] - n_pos)
    cont = {role: _vocab(prefix, vs.get("continuation", 0))
            for role, prefix in (("target", "tcx"), ("aspect", "acx"), ("opinion", "ocx"))}
    fillers = _vocab("w", vs["filler"])

    lo, hi = spec.doc_length
    qlo, qhi = spec.quads_per_doc
    quad_counts = rng.integers(qlo, qhi + 1, size=spec.doc_count)
    total = int(quad_counts.sum())
    cross_flags = _choose_exact(rng, total, spec.cross_sentence_fraction)
    null_flags = _choose_exact(rng, total, spec.null_aspect_fraction)
    pos_flags = _choose_exact(rng, total, spec.positive_fraction)

    docs = []
    offset = 0
    for d in range(spec.doc_count):
        m = int(quad_counts[d])
        sl = slice(offset, offset + m)
        offset += m
        docs.append(_build_document(
            rng, spec, f"syn-{seed}-{d:05d}", m, cross_flags[sl], null_flags[sl], pos_flags[sl],
            targets, aspects, opinions_pos, opinions_neg, cont, fillers, lo, hi))

    stats = CorpusStats()
    cross = dict.fromkeys(RELATIONS, 0)
    totals = dict.fromkeys(RELATIONS, 0)
    for doc, planted in docs:
        stats = stats + planted["stats"]
        for r in RELATIONS:
            cross[r] += planted["cross"][r]
            totals[r] += planted["total"][r]
    return SyntheticCorpus([doc for doc, _ in docs], PlantedTruth(stats, cross, totals))


def synthesize_corpus(spec: GenSpec | dict, seed: int) -> list[Document]:
    return synthesize(spec, seed).documents


def _build_document(rng, spec, doc_id, m, cross, null, positive,
                    targets, aspects, opinions_pos, opinions_neg, cont, fillers, lo, hi):
    n_cross = int(cross.sum())
    n_sent = 1 if n_cross == 0 else 1 + int(rng.integers(1, min(n_cross, 3) + 1))
    n_aspects = int((~null).sum())
    need = _minimum_length(m, n_aspects, n_sent)
    if need > hi:
        raise GenerationError(
            f"{doc_id}: {m} quadruples in {n_sent} sentences need >= {need} tokens "
            f"but doc_length max is {hi}")
    length = int(rng.integers(max(lo, need), hi + 1))
    budget = length - need  # tokens left for span continuations and fillers

    def phrase(role: str, head_word: str) -> list[str]:
        nonlocal budget
        words = [head_word]
        extra = int(rng.integers(0, spec.max_span_len))
        extra = min(extra, budget)
        budget -= extra
        words += [cont[role][int(rng.integers(len(cont[role])))] for _ in range(extra)]
        return words

    # Units are atomic runs of tokens: (kind, words, quad index or None).
    sentences: list[list] = [[] for _ in range(n_sent)]
    target_unit = ["target", phrase("target", targets[int(rng.integers(len(targets)))]), None]
    sentences[0].append(target_unit)
    later = list(range(1, n_sent))
    # Every later sentence gets at least one cross-sentence group.
    cross_idx = [q for q in range(m) if cross[q]]
    rng.shuffle(cross_idx)
    home = {}
    for k, q in enumerate(cross_idx):
        home[q] = later[k] if k < len(later) else later[int(rng.integers(len(later)))]
    for q in range(m):
        sent = home.get(q, 0)
        group = []
        if not null[q]:
            group.append(["aspect", phrase("aspect", aspects[int(rng.integers(len(aspects)))]), q])
        pool = opinions_pos if positive[q] else opinions_neg
        group.append(["opinion", phrase("opinion", pool[int(rng.integers(len(pool)))]), q])
        sentences[sent].append(group)

    # Distribute remaining budget as single-token fillers.
    for _ in range(budget):
        s = int(rng.integers(n_sent))
        sentences[s].append(["filler", [fillers[int(rng.integers(len(fillers)))]], None])

    tokens: list[str] = []
    pos: list[str] = []
    sent_spans: list[Span] = []
    placed = []  # (kind, span, quad index, sentence)
    for s, units in enumerate(sentences):
        order = rng.permutation(len(units))
        start = len(tokens)
        for u in order:
            unit = units[u]
            group = unit if isinstance(unit[0], list) else [unit]
            if len(group) > 1 and rng.random() < 0.5:
                group = group[::-1]
            for kind, words, q in group:
                b = len(tokens)
                tokens.extend(words)
                if kind == "opinion":
                    pos.extend(["ADJ"] * len(words))
                elif kind == "filler":
                    pos.append(_FILLER_TAGS[int(rng.integers(len(_FILLER_TAGS)))])
                else:
                    pos.extend(["NOUN"] * len(words))
                placed.append((kind, Span(b, len(tokens)), q, s))
        tokens.append(".")
        pos.append("PUNCT")
        placed.append(("punct", Span(len(tokens) - 1, len(tokens)), None, s))
        sent_spans.append(Span(start, len(tokens)))

    target_span = next(sp for kind, sp, _, _ in placed if kind == "target")
    aspect_of = {q: sp for kind, sp, q, _ in placed if kind == "aspect"}
    opinion_of = {q: sp for kind, sp, q, _ in placed if kind == "opinion"}

    deps: list[tuple[int, int, str]] = []
    for kind, sp, q, s in placed:
        for t in range(sp.begin + 1, sp.end):
            deps.append((sp.head, t, "compound" if kind != "opinion" else "fixed"))
    for q, sp in aspect_of.items():
        deps.append((target_span.head, sp.head, "nmod"))
    for q, sp in opinion_of.items():
        anchor = aspect_of[q].head if q in aspect_of else target_span.head
        deps.append((anchor, sp.head, "amod"))
    # Fillers and punctuation hang off a random earlier-attached token of
    # their own sentence, or off the target when the sentence has none yet.
    attached = {s: [] for s in range(n_sent)}
    for kind, sp, q, s in placed:
        if kind in ("target", "aspect", "opinion"):
            attached[s].extend(range(sp.begin, sp.end))
    for kind, sp, q, s in placed:
        if kind in ("filler", "punct"):
            choices = attached[s] or [target_span.head]
            parent = choices[int(rng.integers(len(choices)))]
            deps.append((parent, sp.head, "punct" if kind == "punct" else "dep"))
            attached[s].append(sp.head)

    quads = set()
    for q in range(m):
        quads.add(Quadruple(target_span, aspect_of.get(q), opinion_of[q],
                            "pos" if positive[q] else "neg"))
    text = " ".join(tokens)
    doc = Document(doc_id, spec.lang, text, tuple(tokens), tuple(sent_spans), tuple(pos),
                   tuple(deps), frozenset(quads))

    planted_cross = {"TA": 0, "TO": 0, "AO": 0}
    planted_total = {"TA": n_aspects, "TO": m, "AO": n_aspects}
    for q in range(m):
        if cross[q]:
            planted_cross["TO"] += 1
            if not null[q]:
                planted_cross["TA"] += 1
    return doc, {"stats": _planted_stats(doc, m, n_aspects, int(positive.sum()), n_sent),
                 "cross": planted_cross, "total": planted_total}


def _planted_stats(doc: Document, m: int, n_aspects: int, n_pos: int, n_sent: int) -> CorpusStats:
    return CorpusStats(
        doc_count=1,
        sentence_count=n_sent,
        token_count=doc.n,
        entity_counts={"T": 1 if m else 0, "A": n_aspects, "O": m},
        relation_counts={"TA": n_aspects, "TO": m, "AO": n_aspects},
        quad_count=m,
        sentiment_counts={"pos": n_pos, "neg": m - n_pos},
    )


def spec_to_dict(spec: GenSpec) -> dict:
    d = asdict(spec)
    d["doc_length"] = list(spec.doc_length)
    d["quads_per_doc"] = list(spec.quads_per_doc)
    return d
