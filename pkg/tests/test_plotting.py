from gridquad.corpus import distribution_analysis
from gridquad.metrics import error_analysis
from gridquad.plotting import plot_analysis, plot_errors, plot_training
from gridquad.synth import synthesize_corpus

PNG = b"\x89PNG\r\n\x1a\n"


def test_analysis_figures(tmp_path):
    docs = synthesize_corpus({"doc_count": 10}, 0)
    paths = plot_analysis(distribution_analysis(docs), tmp_path / "figs")
    assert sorted(p.name for p in paths) == ["cross_sentence.png", "doc_length.png", "quad_count.png"]
    assert all(p.read_bytes().startswith(PNG) for p in paths)


def test_error_and_training_figures(tmp_path):
    docs = synthesize_corpus({"doc_count": 3}, 0)
    err = plot_errors(error_analysis([set()] * 3, docs), tmp_path / "e.png")
    recs = [{"epoch": 1, "loss": 2.0, "dev": {"quadruple": {"F1": 0.1}}},
            {"epoch": 2, "loss": 1.0, "dev": {"quadruple": {"F1": 0.4}}}]
    tr = plot_training(recs, tmp_path / "t.png")
    no_dev = plot_training([{"epoch": 1, "loss": 1.0}], tmp_path / "t2.png")
    assert all(p.read_bytes().startswith(PNG) for p in (err, tr, no_dev))


def test_figures_are_reproducible(tmp_path):
    report = distribution_analysis(synthesize_corpus({"doc_count": 5}, 1))
    a = plot_analysis(report, tmp_path / "a")
    b = plot_analysis(report, tmp_path / "b")
    assert [p.read_bytes() for p in a] == [p.read_bytes() for p in b]
