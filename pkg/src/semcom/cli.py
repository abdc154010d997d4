"""Command line entry points.

Subcommands cover the whole workflow: generate a corpus, train a model,
evaluate it at an operating point, run a sweep experiment with its
embedded checks, verify the exact-identity oracle, and push sentences
through the classical baseline.  Every command exits zero only when its
assertions hold, so the binary is scriptable in CI loops.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from semcom.corpus import load_corpus, save_corpus
from semcom.estimator import HuffmanQamLink, SemanticTransceiver
from semcom.experiments import (
    RUNNERS,
    ExperimentConfig,
    resolve_corpus_path,
    run_oracle,
)
from semcom.synthetic import make_copy_corpus, make_french_english_corpus


def _add_corpus_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--corpus", help="tab-separated pair file (resolved against $SEMCOM_CORPUS_ROOT)")
    parser.add_argument(
        "--synthetic",
        choices=("copy", "fr_en"),
        help="generate the corpus in memory instead of reading a file",
    )
    parser.add_argument("--pairs", type=int, default=2000, help="corpus size cap")
    parser.add_argument("--vocab", type=int, default=240, help="invented vocabulary size (copy corpus)")
    parser.add_argument("--corpus-seed", type=int, default=0)


def _resolve_pairs(args) -> list:
    if args.synthetic == "copy":
        corpus = make_copy_corpus(n_pairs=args.pairs, vocab_size=args.vocab, seed=args.corpus_seed)
    elif args.synthetic == "fr_en":
        corpus = make_french_english_corpus(n_pairs=args.pairs, seed=args.corpus_seed)
    elif args.corpus:
        corpus = load_corpus(resolve_corpus_path(args.corpus), max_pairs=args.pairs)
    else:
        raise SystemExit("need --corpus or --synthetic")
    return corpus.pairs


def _cmd_train(args) -> int:
    pairs = _resolve_pairs(args)
    est = SemanticTransceiver(
        epochs=args.epochs,
        alpha=args.alpha,
        n_max=args.n_max,
        allocation=args.allocation,
        channel=args.channel,
        reference_snr_db=args.snr,
        seed=args.seed,
    )
    est.fit(pairs)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    est.save(out / "model.pt")
    est.history_.to_csv(out / "history.csv")
    final = est.history_.final
    if final:
        print(
            f"trained {args.epochs} epochs: ce={final.ce_nats:.4f} nats, "
            f"mi={final.mi_nats:.4f} nats, val_bleu={final.val_bleu:.4f}"
        )
    print(f"model -> {out / 'model.pt'}")
    return 0


def _cmd_eval(args) -> int:
    est = SemanticTransceiver.load(args.model)
    pairs = _resolve_pairs(args)
    report = est.evaluate(pairs, snr_db=args.snr, channel=args.channel, seed=args.seed)
    print(json.dumps(report.__dict__, indent=2))
    return 0


def _cmd_sweep(args) -> int:
    if args.config:
        cfg = ExperimentConfig.from_json(Path(args.config).read_text(encoding="utf-8"))
        if args.output:
            cfg.output_dir = args.output
    else:
        if not args.output:
            raise SystemExit("need --output (or a --config carrying output_dir)")
        cfg = ExperimentConfig(
            experiment=args.experiment,
            output_dir=args.output,
            seed=args.seed,
            epochs=args.epochs,
            corpus_pairs=args.pairs,
        )
    cfg.experiment = args.experiment
    result = RUNNERS[args.experiment](cfg)
    for name, ok in result.checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    print(f"rows -> {result.csv_path}")
    print(f"figure -> {result.figure_path}")
    return 0 if result.passed else 1


def _cmd_oracle(args) -> int:
    result = run_oracle(
        n_systems=args.systems,
        seed=args.seed,
        output_dir=args.output,
        inject_nats=args.inject_nats,
    )
    status = "PASS" if result.passed else "FAIL"
    print(
        f"{status}: {result.n_checks} checks over {result.n_systems} randomized systems, "
        f"{len(result.failures)} failure(s)"
    )
    if result.failures:
        offender = result.failures[0]
        print(f"first failure: {offender['check']} on system {offender['system_index']}")
        if result.report_path:
            print(f"details -> {result.report_path}")
    return 0 if result.passed else 1


def _cmd_baseline(args) -> int:
    pairs = _resolve_pairs(args)
    link = HuffmanQamLink(
        coding=args.coding,
        channel=args.channel,
        translate=args.translate,
    ).fit(pairs)
    score = link.score(pairs[: args.eval_sentences], snr_db=args.snr, seed=args.seed)
    print(
        f"baseline {args.coding}/64-QAM at {args.snr:g} dB: BLEU={score:.4f}, "
        f"{link.mean_bits_per_token():.3f} bits/token"
    )
    if args.codebook:
        link.code_.save(args.codebook)
        print(f"codebook -> {args.codebook}")
    return 0


def _cmd_make_corpus(args) -> int:
    if args.kind == "copy":
        corpus = make_copy_corpus(n_pairs=args.pairs, vocab_size=args.vocab, seed=args.seed)
    else:
        corpus = make_french_english_corpus(n_pairs=args.pairs, seed=args.seed)
    save_corpus(corpus, args.output)
    print(f"{len(corpus)} pairs -> {args.output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semcom",
        description="learned semantic text transmission over simulated channels",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="fit a transceiver and save it")
    _add_corpus_arguments(p_train)
    p_train.add_argument("--output", required=True)
    p_train.add_argument("--epochs", type=int, default=30)
    p_train.add_argument("--alpha", type=float, default=0.01)
    p_train.add_argument("--n-max", dest="n_max", type=int, default=6)
    p_train.add_argument("--allocation", choices=("fixed", "adaptive"), default="fixed")
    p_train.add_argument("--channel", choices=("awgn", "rayleigh"), default="awgn")
    p_train.add_argument("--snr", type=float, default=7.0, help="training SNR in dB")
    p_train.add_argument("--seed", type=int, default=0)
    p_train.set_defaults(func=_cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a saved model at an operating point")
    _add_corpus_arguments(p_eval)
    p_eval.add_argument("--model", required=True)
    p_eval.add_argument("--snr", type=float, default=7.0)
    p_eval.add_argument("--channel", choices=("awgn", "rayleigh"), default=None)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.set_defaults(func=_cmd_eval)

    p_sweep = sub.add_parser("sweep", help="run a sweep experiment with embedded checks")
    p_sweep.add_argument("experiment", choices=sorted(RUNNERS))
    p_sweep.add_argument("--config", help="experiment config JSON to start from")
    p_sweep.add_argument("--output", help="output directory (results.csv, figure.png)")
    p_sweep.add_argument("--seed", type=int, default=0)
    p_sweep.add_argument("--epochs", type=int, default=25)
    p_sweep.add_argument("--pairs", type=int, default=2000)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_oracle = sub.add_parser("oracle", help="verify exact identities on random systems")
    p_oracle.add_argument("--systems", type=int, default=200)
    p_oracle.add_argument("--seed", type=int, default=0)
    p_oracle.add_argument("--output", help="directory for the JSON report")
    p_oracle.add_argument(
        "--inject-nats",
        dest="inject_nats",
        type=float,
        default=0.0,
        help="shift computed residuals to prove the harness can fail",
    )
    p_oracle.set_defaults(func=_cmd_oracle)

    p_base = sub.add_parser("baseline", help="score the classical chain")
    _add_corpus_arguments(p_base)
    p_base.add_argument("--snr", type=float, default=12.0)
    p_base.add_argument("--channel", choices=("awgn", "rayleigh"), default="awgn")
    p_base.add_argument("--coding", choices=("huffman", "fixed6"), default="huffman")
    p_base.add_argument("--translate", action="store_true")
    p_base.add_argument("--eval-sentences", dest="eval_sentences", type=int, default=400)
    p_base.add_argument("--codebook", help="write the token codebook here")
    p_base.add_argument("--seed", type=int, default=0)
    p_base.set_defaults(func=_cmd_baseline)

    p_make = sub.add_parser("make-corpus", help="write a synthetic corpus file")
    p_make.add_argument("kind", choices=("copy", "fr_en"))
    p_make.add_argument("--output", required=True)
    p_make.add_argument("--pairs", type=int, default=2000)
    p_make.add_argument("--vocab", type=int, default=240)
    p_make.add_argument("--seed", type=int, default=0)
    p_make.set_defaults(func=_cmd_make_corpus)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
