"""Command-line entry point: ``gridquad <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
Training options come from ``--config`` (a JSON object keyed by TrainConfig
field names); flags given on the command line override the file.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import brat
from .config import ConfigError, TrainConfig
from .corpus import CorpusError, corpus_stats, distribution_analysis, read_corpus, sorted_quads, write_corpus
from .metrics import error_analysis, evaluate
from .model import NonFiniteGradientError, load_params, save_params
from .synth import GenSpec, spec_to_dict, synthesize
from .train import TrainingError, predict_corpus, train

log = logging.getLogger("gridquad")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _formatter(prog):
    # Fixed width keeps --help output independent of the terminal.
    return argparse.HelpFormatter(prog, width=88, max_help_position=32)


def _existing(path: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"no such file or directory: {path}")
    return p


def _write_json(path, obj) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_text(path, text: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text, encoding="utf-8")


# --------------------------------------------------------------------------
# subcommands

def cmd_convert(args) -> int:
    src = _existing(args.src)
    anns = sorted(src.glob("*.ann"))
    if not anns:
        raise UsageError(f"{src}: no .ann files found")
    docs = []
    for ann in anns:
        txt, tok = ann.with_suffix(".txt"), ann.with_suffix(".tok")
        for p in (txt, tok):
            if not p.exists():
                raise CorpusError(f"{ann.name}: missing companion file {p.name}")
        try:
            docs.append(brat.convert_pair(txt, ann, tok, args.lang))
        except brat.AnnError as exc:
            raise CorpusError(f"{ann}: {exc}") from exc
    write_corpus(args.out, docs)
    print(f"converted {len(docs)} documents -> {args.out}")
    return EXIT_OK


def cmd_split(args) -> int:
    try:
        ratios = brat.parse_ratio(args.ratio)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if any(r <= 0 for r in ratios):
        raise UsageError(f"ratio parts must be positive, got {args.ratio}")
    docs = read_corpus(_existing(args.input))
    parts = brat.split_corpus(docs, ratios, args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, part in zip(("train", "dev", "test"), parts):
        write_corpus(out / f"{name}.jsonl", part)
    print("train\tdev\ttest\n" + "\t".join(str(len(p)) for p in parts))
    return EXIT_OK


def _stats_tsv(stats) -> str:
    d = stats.to_dict()
    rows = [("docs", d["doc_count"]), ("sentences", d["sentence_count"]), ("tokens", d["token_count"])]
    rows += [(k, v) for k, v in d["entity_counts"].items()]
    rows += [(k, v) for k, v in d["relation_counts"].items()]
    rows += [("quadruples", d["quad_count"])] + [(k, v) for k, v in d["sentiment_counts"].items()]
    return "".join(f"{k}\t{v}\n" for k, v in rows)


def cmd_stats(args) -> int:
    stats = corpus_stats(read_corpus(_existing(args.input)))
    _write_json(args.out, stats.to_dict())
    table = _stats_tsv(stats)
    if args.tsv:
        _write_text(args.tsv, table)
    sys.stdout.write(table)
    return EXIT_OK


def cmd_analyze(args) -> int:
    report = distribution_analysis(read_corpus(_existing(args.input)))
    out = Path(args.out_dir)
    _write_json(out / "analysis.json", report.to_dict())
    lines = ["section\tbin\tvalue"]
    lines += [f"doc_length\t{k}\t{v}" for k, v in report.doc_length_histogram.items()]
    lines += [f"quad_count\t{k}\t{v}" for k, v in report.quad_count_histogram.items()]
    lines += [f"cross_sentence\t{k}\t{v:.6f}" for k, v in report.cross_sentence_ratio.items()]
    _write_text(out / "analysis.tsv", "\n".join(lines) + "\n")
    if not args.no_figures:
        from .plotting import plot_analysis
        plot_analysis(report, out)
    print(f"wrote analysis to {out}")
    return EXIT_OK


def cmd_kappa(args) -> int:
    if args.labels:
        with open(_existing(args.labels), encoding="utf-8") as fh:
            layers = json.load(fh)
        if not isinstance(layers, dict) or not all(
                isinstance(v, list) and len(v) == 2 for v in layers.values()):
            raise CorpusError("labels file must map each layer to [annotator A labels, annotator B labels]")
        try:
            result = brat.cohen_kappa_from_labels({k: tuple(v) for k, v in layers.items()})
        except brat.UndefinedKappaError as exc:
            raise CorpusError(str(exc)) from exc
        rows = {k: {"p_o": a.p_o, "p_e": a.p_e, "kappa": a.kappa} for k, a in result.items()}
    else:
        if args.po is None or args.pe is None:
            raise UsageError("kappa needs either --labels or both --po and --pe")
        try:
            rows = {"overall": {"p_o": args.po, "p_e": args.pe, "kappa": brat.cohen_kappa(args.po, args.pe)}}
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        except brat.UndefinedKappaError as exc:
            raise CorpusError(str(exc)) from exc
    _write_json(args.out, rows)
    text = "layer\tP_o\tP_e\tkappa\n" + "".join(
        f"{k}\t{v['p_o']:.4f}\t{v['p_e']:.4f}\t{v['kappa']:.4f}\n" for k, v in rows.items())
    sys.stdout.write(text)
    return EXIT_OK


def cmd_synth(args) -> int:
    spec = GenSpec.load(_existing(args.spec)) if args.spec else GenSpec()
    if args.docs is not None:
        spec.doc_count = args.docs
    spec.validate()
    corpus = synthesize(spec, args.seed)
    write_corpus(args.out, corpus.documents)
    if args.truth:
        t = corpus.truth
        _write_json(args.truth, {"spec": spec_to_dict(spec), "seed": args.seed,
                                 "stats": t.stats.to_dict(),
                                 "cross_sentence_counts": t.cross_sentence_counts,
                                 "relation_totals": t.relation_totals})
    print(f"synthesized {len(corpus.documents)} documents -> {args.out}")
    return EXIT_OK


_CONFIG_FLAGS = ("learning_rate", "epochs", "h_x", "h_p", "h_s", "h_e", "h_r", "dropout", "seed",
                 "vocab_size", "use_skem", "use_pos", "use_dep", "randomize_syntax",
                 "normalize_adjacency")


def resolve_config(args) -> TrainConfig:
    """Defaults, then the --config file, then explicit flags."""
    base = TrainConfig().to_dict()
    if args.config:
        with open(_existing(args.config), encoding="utf-8") as fh:
            try:
                file_values = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{args.config}: {exc}") from exc
        if not isinstance(file_values, dict):
            raise ConfigError(f"{args.config}: expected a JSON object")
        TrainConfig.from_dict(file_values)  # type-check the file on its own first
        base.update(file_values)
    for name in _CONFIG_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            base[name] = value
    try:
        return TrainConfig.from_dict(base)
    except ConfigError as exc:
        raise UsageError(str(exc)) from exc


def cmd_train(args) -> int:
    config = resolve_config(args)
    train_docs = read_corpus(_existing(args.train))
    dev_docs = read_corpus(_existing(args.dev)) if args.dev else []
    params, tlog = train(train_docs, dev_docs, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_params(params, out / "model.npz")
    tlog.write(out / "train_log.jsonl")
    _write_json(out / "config.json", config.to_dict())
    if tlog.records and not args.no_figures:
        from .plotting import plot_training
        plot_training(tlog.records, out / "training.png")
    print(f"best epoch {tlog.best_epoch}; model -> {out / 'model.npz'}")
    return EXIT_OK


def _prediction_lines(docs, preds) -> str:
    return "".join(json.dumps({"doc_id": d.doc_id,
                               "quadruples": [q.to_dict() for q in sorted_quads(preds[d.doc_id])]},
                              sort_keys=True) + "\n" for d in docs)


def cmd_predict(args) -> int:
    params = load_params(_existing(args.model))
    params.check_finite()
    docs = read_corpus(_existing(args.input))
    preds = predict_corpus(docs, params)
    _write_text(args.out, _prediction_lines(docs, preds))
    if args.trace:
        _write_text(args.trace, "".join(
            json.dumps({"doc_id": d.doc_id, "dropped": preds[d.doc_id].trace.dropped}) + "\n"
            for d in docs))
    print(f"predicted {sum(len(p) for p in preds.values())} quadruples for {len(docs)} documents")
    return EXIT_OK


def cmd_eval(args) -> int:
    params = load_params(_existing(args.model))
    params.check_finite()
    docs = read_corpus(_existing(args.test))
    preds = predict_corpus(docs, params)
    report, errors = evaluate(preds, docs), error_analysis(preds, docs)
    out = Path(args.report)
    _write_json(out / "eval.json", {"metrics": report.to_dict(), "errors": errors.to_dict()})
    _write_text(out / "eval.tsv", report.table())
    _write_text(out / "errors.tsv", errors.table())
    _write_text(out / "predictions.jsonl", _prediction_lines(docs, preds))
    if not args.no_figures:
        from .plotting import plot_errors
        plot_errors(errors, out / "errors.png")
    sys.stdout.write(report.table())
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    from .gradcheck import grad_check, toy_problem

    if not 1 <= args.n <= 8 or not 1 <= args.dim <= 16:
        raise UsageError("gradcheck expects 1 <= --n <= 8 and 1 <= --dim <= 16")
    params, inputs, ge, gr = toy_problem(args.n, args.dim, args.seed)
    results = grad_check(params, inputs, ge, gr, tensors=tuple(params.tensors))
    lines = ["tensor\tentries\tmax_rel_error"] + [
        f"{r.tensor}\t{r.checked}\t{r.max_rel_error:.3e}" for r in results]
    text = "\n".join(lines) + "\n"
    _write_text(args.out, text)
    sys.stdout.write(text)
    worst = max(r.max_rel_error for r in results)
    if worst > args.tol:
        print(f"FAIL: max relative error {worst:.3e} > {args.tol:g}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"ok: max relative error {worst:.3e} <= {args.tol:g}")
    return EXIT_OK


# --------------------------------------------------------------------------
# parser

def _add_config_flags(p) -> None:
    g = p.add_argument_group("training options (override --config)")
    g.add_argument("--learning-rate", dest="learning_rate", type=float)
    g.add_argument("--epochs", type=int)
    g.add_argument("--dropout", type=float)
    g.add_argument("--seed", type=int)
    for dim in ("h_x", "h_p", "h_s", "h_e", "h_r"):
        g.add_argument("--" + dim.replace("_", "-"), dest=dim, type=int)
    g.add_argument("--vocab-size", dest="vocab_size", type=int)
    for flag in ("skem", "pos", "dep"):
        g.add_argument(f"--{flag}", dest=f"use_{flag}", action=argparse.BooleanOptionalAction,
                       default=None, help=f"enable/disable the {flag.upper()} input")
    g.add_argument("--random-syntax", dest="randomize_syntax", action=argparse.BooleanOptionalAction,
                   default=None, help="replace POS tags and dependency edges with seeded random ones")
    g.add_argument("--normalize-adjacency", dest="normalize_adjacency",
                   action=argparse.BooleanOptionalAction, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gridquad", formatter_class=_formatter,
                     description="Grid-tagging sentiment quadruple extraction toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text, formatter_class=_formatter)
        p.set_defaults(func=func)
        return p

    p = add("convert", cmd_convert, "convert BRAT .ann/.txt/.tok triples in a directory to a corpus")
    p.add_argument("--src", required=True, help="directory holding <stem>.txt, <stem>.ann, <stem>.tok")
    p.add_argument("--lang", required=True, help="language tag stored on every document")
    p.add_argument("--out", required=True, help="output corpus (JSON lines)")

    p = add("split", cmd_split, "seeded train/dev/test split of a corpus")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--ratio", default="8:1:1", help="train:dev:test proportions (default 8:1:1)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-dir", required=True, help="receives train.jsonl, dev.jsonl, test.jsonl")

    p = add("stats", cmd_stats, "corpus statistics")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True, help="JSON report")
    p.add_argument("--tsv", help="optional tab-separated copy")

    p = add("analyze", cmd_analyze, "length, quadruple-count and cross-sentence distributions")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out-dir", required=True, help="receives analysis.json, analysis.tsv and figures")
    p.add_argument("--no-figures", action="store_true")

    p = add("kappa", cmd_kappa, "Cohen's kappa from agreement fractions or paired labels")
    p.add_argument("--po", type=float, help="observed agreement")
    p.add_argument("--pe", type=float, help="chance agreement")
    p.add_argument("--labels", help='JSON file {"layer": [[labels A], [labels B]], ...}')
    p.add_argument("--out", required=True, help="JSON report")

    p = add("synth", cmd_synth, "generate a seeded synthetic corpus")
    p.add_argument("--docs", type=int, help="document count (overrides the spec)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--spec", help="generator spec (JSON)")
    p.add_argument("--out", required=True)
    p.add_argument("--truth", help="optional JSON file for the planted ground truth")

    p = add("train", cmd_train, "train a model, keeping the best dev epoch")
    p.add_argument("--config", help="JSON object of TrainConfig fields")
    p.add_argument("--train", required=True)
    p.add_argument("--dev", help="dev corpus for model selection (latest epoch is kept without one)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--no-figures", action="store_true")
    _add_config_flags(p)

    p = add("eval", cmd_eval, "evaluate a model on a gold corpus")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--report", required=True, help="output directory")
    p.add_argument("--no-figures", action="store_true")

    p = add("predict", cmd_predict, "predict quadruples for a corpus")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True, help="predictions (JSON lines)")
    p.add_argument("--trace", help="optional file listing grid cells dropped while decoding")

    p = add("gradcheck", cmd_gradcheck, "finite-difference check of the analytic gradients")
    p.add_argument("--n", type=int, default=4, help="tokens in the toy document (default 4)")
    p.add_argument("--dim", type=int, default=6, help="hidden width (default 6)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--out", required=True, help="TSV report")
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            raise UsageError("gridquad: error: a subcommand is required")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (FloatingPointError, NonFiniteGradientError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, TrainingError, OSError, KeyError) as exc:
        # ValueError covers the corpus, annotation, config, codec and checkpoint errors
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
