"""Exact-match evaluation and error attribution for predicted quadruples."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .corpus import (RELATIONS, ROLES, Document, Quadruple, entity_sets, relation_sets,
                     sorted_quads)


class AlignmentMismatch(ValueError):
    pass


@dataclass
class PRF:
    gold: int = 0
    pred: int = 0
    matched: int = 0

    @property
    def precision(self) -> float:
        return self.matched / self.pred if self.pred else 0.0

    @property
    def recall(self) -> float:
        return self.matched / self.gold if self.gold else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0

    def add(self, gold: set, pred: set) -> None:
        self.gold += len(gold)
        self.pred += len(pred)
        self.matched += len(gold & pred)

    def to_dict(self) -> dict:
        return {"P": self.precision, "R": self.recall, "F1": self.f1,
                "gold": self.gold, "pred": self.pred, "matched": self.matched}


@dataclass
class EvalReport:
    entity: dict = field(default_factory=lambda: {r: PRF() for r in ROLES})
    relation: dict = field(default_factory=lambda: {r: PRF() for r in RELATIONS})
    quadruple: PRF = field(default_factory=PRF)

    def to_dict(self) -> dict:
        return {
            "entity": {k: v.to_dict() for k, v in self.entity.items()},
            "relation": {k: v.to_dict() for k, v in self.relation.items()},
            "quadruple": self.quadruple.to_dict(),
        }

    def table(self) -> str:
        """Tab-separated summary: entity F1, relation F1, quadruple P/R/F1 (percent)."""
        head = ["T", "A", "O", "TA", "TO", "AO", "P", "R", "F1"]
        vals = [self.entity[r].f1 for r in ROLES] + [self.relation[r].f1 for r in RELATIONS]
        vals += [self.quadruple.precision, self.quadruple.recall, self.quadruple.f1]
        return "\t".join(head) + "\n" + "\t".join(f"{100 * v:.2f}" for v in vals) + "\n"


def _align(predictions, gold: Sequence[Document]) -> list[tuple[Document, set]]:
    if isinstance(predictions, Mapping):
        missing = [d.doc_id for d in gold if d.doc_id not in predictions]
        extra = set(predictions) - {d.doc_id for d in gold}
        if missing or extra:
            raise AlignmentMismatch(f"prediction ids do not match gold: missing {sorted(missing)[:5]}, "
                                    f"unexpected {sorted(extra)[:5]}")
        return [(d, set(predictions[d.doc_id])) for d in gold]
    predictions = list(predictions)
    if len(predictions) != len(gold):
        raise AlignmentMismatch(f"{len(predictions)} predictions for {len(gold)} gold documents")
    return [(d, set(p)) for d, p in zip(gold, predictions)]


def evaluate(predictions, gold: Sequence[Document]) -> EvalReport:
    """Micro-averaged exact-match P/R/F1.

    ``predictions`` maps doc_id to a quadruple set, or is a sequence aligned
    with ``gold``.
    """
    report = EvalReport()
    for doc, pred in _align(predictions, gold):
        g_ents, p_ents = entity_sets(doc.quadruples), entity_sets(pred)
        for r in ROLES:
            report.entity[r].add(g_ents[r], p_ents[r])
        g_rels, p_rels = relation_sets(doc.quadruples), relation_sets(pred)
        for r in RELATIONS:
            report.relation[r].add(g_rels[r], p_rels[r])
        report.quadruple.add(set(doc.quadruples), pred)
    return report


# --------------------------------------------------------------------------
# error analysis

ERROR_KINDS = ("T", "A", "O", "TA", "TO", "AO", "pos->neg", "neg->pos")
_PAIRS = {"TA": ("target", "aspect"), "TO": ("target", "opinion"), "AO": ("aspect", "opinion")}
_ROLE_ATTR = {"T": "target", "A": "aspect", "O": "opinion"}


@dataclass
class ErrorBreakdown:
    counts: dict
    total_gold: int

    @property
    def rates(self) -> dict:
        return {k: (v / self.total_gold if self.total_gold else 0.0) for k, v in self.counts.items()}

    def to_dict(self) -> dict:
        return {"total_gold_quadruples": self.total_gold, "counts": dict(self.counts),
                "rates": self.rates}

    def table(self) -> str:
        return "\t".join(ERROR_KINDS) + "\n" + "\t".join(
            f"{100 * self.rates[k]:.2f}" for k in ERROR_KINDS) + "\n"


def _overlap(g: Quadruple, p: Quadruple) -> int:
    return (g.target == p.target) + (g.aspect == p.aspect) + (g.opinion == p.opinion)


def _classify(g: Quadruple, preds: list[Quadruple]) -> list[str]:
    """Error kinds charged to one unmatched gold quadruple."""
    if not preds:
        return ["T", "A", "O"]
    best = max(preds, key=lambda p: _overlap(g, p))  # max keeps the first on ties
    p_ents = entity_sets(preds)
    missing = [r for r in ROLES if getattr(g, _ROLE_ATTR[r]) is not None
               and getattr(g, _ROLE_ATTR[r]) not in p_ents[r]]
    if missing:
        return missing
    if _overlap(g, best) == 3:
        return [f"{g.sentiment}->{best.sentiment}"]
    # Every gold span was predicted somewhere, but not linked as in gold.
    p_rels = relation_sets(preds)
    differing = [k for k, (a, b) in _PAIRS.items()
                 if (getattr(g, a), getattr(g, b)) != (getattr(best, a), getattr(best, b))]
    broken = [k for k in differing if None not in (getattr(g, _PAIRS[k][0]), getattr(g, _PAIRS[k][1]))
              and (getattr(g, _PAIRS[k][0]), getattr(g, _PAIRS[k][1])) not in p_rels[k]]
    if broken:
        return broken
    # Null-aspect gold or all gold pairs present elsewhere: blame the best pairing's differing links.
    return differing


def error_analysis(predictions, gold: Sequence[Document]) -> ErrorBreakdown:
    counts = dict.fromkeys(ERROR_KINDS, 0)
    total = 0
    for doc, pred in _align(predictions, gold):
        total += len(doc.quadruples)
        ordered_preds = sorted_quads(pred)
        for g in sorted_quads(doc.quadruples):
            if g in pred:
                continue
            for kind in _classify(g, ordered_preds):
                counts[kind] += 1
    return ErrorBreakdown(counts, total)
