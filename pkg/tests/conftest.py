import pytest

from gridquad.corpus import Document, Quadruple, Span

EXAMPLE_TEXT = "Bu o'yin interfeys dizayni juda qulay"
EXAMPLE_TOKENS = ("Bu", "o'yin", "interfeys", "dizayni", "juda", "qulay")
EXAMPLE_OFFSETS = [(0, 2), (3, 8), (9, 18), (19, 26), (27, 31), (32, 37)]
EXAMPLE_POS = ("DET", "NOUN", "NOUN", "NOUN", "ADV", "ADJ")
EXAMPLE_DEPS = ((1, 0, "det"), (3, 2, "compound"), (3, 1, "nmod:poss"), (5, 3, "nsubj"), (5, 4, "advmod"))
EXAMPLE_QUAD = Quadruple(Span(1, 2), Span(2, 4), Span(5, 6), "pos")

EXAMPLE_ANN = (
    "T1\tTAR 3 8\to'yin\n"
    "T2\tASP 9 26\tinterfeys dizayni\n"
    "T3\tOPIN 32 37\tqulay\n"
    "R1\tTAR-ASP Arg1:T1 Arg2:T2\n"
    "R2\tASP-OPIN Arg1:T2 Arg2:T3\n"
    "R3\tPOS Arg1:T1 Arg2:T3\n"
)


def make_doc(tokens, quads=(), sentences=None, pos=None, deps=(), doc_id="d0", lang="xx"):
    tokens = tuple(tokens)
    n = len(tokens)
    return Document(doc_id, lang, " ".join(tokens), tokens,
                    tuple(sentences) if sentences is not None else ((Span(0, n),) if n else ()),
                    tuple(pos) if pos is not None else ("NOUN",) * n, tuple(deps), frozenset(quads))


@pytest.fixture
def example_doc():
    return Document("example", "uz", EXAMPLE_TEXT, EXAMPLE_TOKENS, (Span(0, 6),), EXAMPLE_POS, EXAMPLE_DEPS,
                    frozenset({EXAMPLE_QUAD}))


@pytest.fixture
def small_config():
    from gridquad.config import TrainConfig
    return TrainConfig(h_x=8, h_p=4, h_s=8, h_e=6, h_r=4, dropout=0.0, epochs=2, seed=0)


# Acceptance lines are collected here and printed once at the end of the run,
# so they show up even when pytest captures output.
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
