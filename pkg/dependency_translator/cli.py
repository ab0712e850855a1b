"""Command-line surface: training, scoring, parsing, translation, decoding and verification."""

import argparse
import logging
import sys
from typing import List, Optional

from dependency_translator import logprob, tools, verification
from dependency_translator.config import config
from dependency_translator.decoder import Decoder, rank, rescore_reverse
from dependency_translator.errors import ToolkitError, VerificationFailure
from dependency_translator.graph import WordOccurrence
from dependency_translator.models.estimation import TreebankRecord, estimate_monolingual, estimate_transfer
from dependency_translator.models.monolingual import log_score_content, log_score_ordering, log_score_sentence, parse

logger = logging.getLogger("dependency_translator")


def pos_int(arg: str) -> int:
    """Positive integer type for argparse"""
    value = int(arg)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {arg}")
    return value


def nonneg_int(arg: str) -> int:
    value = int(arg)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {arg}")
    return value


def nonneg_float(arg: str) -> float:
    value = float(arg)
    if not value >= 0.0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative number, got {arg}")
    return value


def _number(value: float) -> str:
    return f"{value:.{config.PROBABILITY_DIGITS}g}"


def _words(sentence: str) -> List[str]:
    return sentence.split()


def cmd_train_lm(args) -> int:
    corpus = tools.read_corpus(args.corpus)
    tools.save_model(estimate_monolingual(corpus, args.lam, args.nmax), args.out)
    return 0


def cmd_train_transfer(args) -> int:
    bitext = tools.read_bitext(args.bitext)
    tools.save_model(estimate_transfer(bitext, args.lam), args.out)
    return 0


def cmd_score(args) -> int:
    lp = log_score_sentence(_words(args.sentence), tools.load_monolingual(args.lm))
    print(f"{logprob.exp(lp):.12f}")
    print(f"{lp:.12f}")
    return 0


def cmd_parse(args) -> int:
    words = _words(args.sentence)
    occurrences = tuple(WordOccurrence(w, i) for i, w in enumerate(words, 1))
    results = parse(words, tools.load_monolingual(args.lm), args.k)
    print("\n".join(tools.format_record(TreebankRecord(occurrences, tree), f"{n}\t{_number(p)}")
                    for n, (tree, p) in enumerate(results, 1)), end="")
    return 0


def cmd_translate(args) -> int:
    src = tools.load_monolingual(args.lm_src)
    decoder = Decoder(src, tools.load_transfer(args.transfer), tools.load_monolingual(args.lm_tgt))
    blocks = []
    for n, record in enumerate(tools.read_corpus(args.tree), 1):
        content = log_score_content(record.tree, src)
        generation = log_score_ordering(record.occurrences, record.tree, src)
        lines = [f"# {n}\t{' '.join(record.words)}\tsource_content={_number(content)}"
                 f"\tsource_generation={_number(generation)}"]
        lines += [f"{' '.join(words)}\t{_number(p)}" for words, p in decoder.translate_tree(record.tree, args.k)]
        blocks.append("\n".join(lines) + "\n")
    print("\n".join(blocks), end="")
    return 0


def cmd_decode(args) -> int:
    decoder = Decoder(tools.load_monolingual(args.lm_src), tools.load_transfer(args.transfer),
                      tools.load_monolingual(args.lm_tgt))
    hyps = tools.read_nbest(args.nbest)
    chains = decoder.chains(hyps)
    if args.reverse:
        target_content, reverse_transfer = args.reverse
        chains = rescore_reverse(chains, tools.load_monolingual(target_content), tools.load_transfer(reverse_transfer))
    for n, result in enumerate(rank(chains, args.mode, args.k), 1):
        factors = " ".join(f"{name}={_number(v)}" for name, v in result.hypothesis.factors.items())
        print(f"{n}\t{_number(result.score)}\t{result.hypothesis.target_string}\t{factors}")
    return 0


def _print_reports(reports):
    for report in reports:
        status = "ok" if report.passed else "FAILED"
        print(f"{report.name}\tcases={report.cases}\tmax_deviation={report.max_deviation:.3e}\t{status}")


def cmd_verify(args) -> int:
    try:
        reports = verification.verify(args.suite, args.seed, args.data_dir)
    except VerificationFailure as exc:
        _print_reports(getattr(exc, "reports", []))
        for report in getattr(exc, "reports", []):
            for failure in report.failures:
                print(f"{report.name}: {failure}", file=sys.stderr)
        return exc.exit_status
    _print_reports(reports)
    return 0


class ToolkitParser(argparse.ArgumentParser):
    """Reports usage errors with exit status 1, the malformed-input status."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = ToolkitParser(
        prog="dependency_translator",
        description="Statistical dependency-tree translation toolkit.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="log progress to stderr (-vv for debug detail)")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("train-lm", help="estimate a monolingual model from a treebank")
    p.add_argument("--corpus", required=True, help="CorpusFile to train on")
    p.add_argument("--out", required=True, help="ModelFile to write")
    p.add_argument("--lambda", dest="lam", type=nonneg_float, default=config.DEFAULT_LAMBDA,
                   help="add-lambda smoothing (default: %(default)s)")
    p.add_argument("--nmax", type=nonneg_int, default=None,
                   help="maximum dependents per relation (default: inferred from the corpus)")
    p.set_defaults(handler=cmd_train_lm)

    p = commands.add_parser("train-transfer", help="estimate a transfer model from a bitext")
    p.add_argument("--bitext", required=True, help="BitextFile to train on")
    p.add_argument("--out", required=True, help="ModelFile to write")
    p.add_argument("--lambda", dest="lam", type=nonneg_float, default=config.DEFAULT_LAMBDA,
                   help="add-lambda smoothing (default: %(default)s)")
    p.set_defaults(handler=cmd_train_transfer)

    p = commands.add_parser("score", help="print P(W) and log P(W)")
    p.add_argument("--lm", required=True)
    p.add_argument("--sentence", required=True)
    p.set_defaults(handler=cmd_score)

    p = commands.add_parser("parse", help="print the k best relation trees")
    p.add_argument("--lm", required=True)
    p.add_argument("--sentence", required=True)
    p.add_argument("--k", type=pos_int, default=config.DEFAULT_K)
    p.set_defaults(handler=cmd_parse)

    p = commands.add_parser("translate", help="rank target strings for source trees")
    p.add_argument("--lm-src", required=True)
    p.add_argument("--transfer", required=True)
    p.add_argument("--lm-tgt", required=True)
    p.add_argument("--tree", required=True, help="CorpusFile of source trees")
    p.add_argument("--k", type=pos_int, default=config.DEFAULT_K)
    p.set_defaults(handler=cmd_translate)

    p = commands.add_parser("decode", help="rank target strings for an n-best list")
    p.add_argument("--lm-src", required=True)
    p.add_argument("--transfer", required=True)
    p.add_argument("--lm-tgt", required=True)
    p.add_argument("--nbest", required=True)
    p.add_argument("--k", type=pos_int, default=config.DEFAULT_K)
    p.add_argument("--mode", choices=config.MODES, default=config.DEFAULT_MODE)
    p.add_argument("--reverse", nargs=2, metavar=("TARGET_LM", "REVERSE_TRANSFER"),
                   help="rescore with P(C_t) P(C_s|C_t) from these models")
    p.set_defaults(handler=cmd_decode)

    p = commands.add_parser("verify", help="compare against the brute-force oracles")
    p.add_argument("--suite", choices=("all",) + verification.SUITES, default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--data-dir", default=None, help="directory holding toy/ (default: bundled data)")
    p.set_defaults(handler=cmd_verify)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = {0: config.LOG_LEVEL, 1: "INFO"}.get(args.verbose, "DEBUG")
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        config.validate()
        return args.handler(args)
    except ToolkitError as exc:
        logger.debug("command failed", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_status
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
