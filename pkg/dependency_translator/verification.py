"""Seeded random instances and the oracle comparison suites behind ``verify``."""

import itertools
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Sequence, Tuple

import numpy as np

from dependency_translator import logprob, oracle, tools
from dependency_translator.config import config
from dependency_translator.decoder import Decoder, RecognitionHypothesis, rank
from dependency_translator.errors import MalformedInput, VerificationFailure
from dependency_translator.graph import (
    HEAD_MARKER,
    Multiset,
    RelationEdge,
    RelationTree,
    UnlabeledGraph,
    WordOccurrence,
    distinct_permutations,
)
from dependency_translator.models.estimation import estimate_monolingual, estimate_transfer
from dependency_translator.models.monolingual import MonolingualModel, enumerate_linearizations, score_content, score_sentence
from dependency_translator.models.transfer import StructuralRule, TransferModel, log_translations, score_translation, translate

logger = logging.getLogger(__name__)

SUITES = ("lm", "transfer", "decode")


@dataclass
class SuiteReport:
    name: str
    cases: int = 0
    max_deviation: float = 0.0
    failures: List[str] = field(default_factory=list)

    def record(self, label: str, expected: float, actual: float, tolerance: float = None):
        tolerance = config.TOLERANCE if tolerance is None else tolerance
        deviation = abs(expected - actual)
        self.cases += 1
        self.max_deviation = max(self.max_deviation, deviation)
        if deviation > tolerance:
            self.failures.append(f"{label}: expected {expected!r}, got {actual!r}")

    def check(self, label: str, condition: bool):
        self.cases += 1
        if not condition:
            self.failures.append(label)

    @property
    def passed(self) -> bool:
        return not self.failures


# Random models

def _dirichlet(rng: np.random.Generator, size: int) -> List[float]:
    return [float(x) for x in rng.dirichlet(np.ones(size))]


def random_monolingual_model(rng: np.random.Generator, vocabulary: Sequence[str] = ("a", "b", "c"),
                             relations: Sequence[str] = ("r", "s"), n_max: int = 1) -> MonolingualModel:
    """A normalized model with every table complete over ``vocabulary`` and ``relations``."""
    top = dict(zip(vocabulary, _dirichlet(rng, len(vocabulary))))
    dependency, detail = {}, {}
    for head in vocabulary:
        for rel in relations:
            for word, p in zip(vocabulary, _dirichlet(rng, len(vocabulary))):
                dependency[head, rel, word] = p
            for n, p in enumerate(_dirichlet(rng, n_max + 1)):
                detail[head, rel, n] = p
    sequencing = {}
    for counts in itertools.product(range(n_max + 1), repeat=len(relations)):
        labels = [HEAD_MARKER] + [rel for rel, n in zip(relations, counts) for _ in range(n)]
        orders = distinct_permutations(labels)
        sequencing.update(zip(orders, _dirichlet(rng, len(orders))))
    return MonolingualModel(top, dependency, detail, sequencing)


def _forms(m: MonolingualModel, depth: int, max_nodes: int) -> List[Tuple[tuple, int]]:
    """(canonical form, node count) of every tree with at most ``depth`` levels."""
    if depth < 1:
        return []
    children = _forms(m, depth - 1, max_nodes - 1)
    found = []
    for word in m.vocabulary:
        per_relation = []
        for rel in m.relations_for(word):
            options = [((), 0)]
            for n in range(1, m.n_max + 1):
                for combo in itertools.combinations_with_replacement(children, n):
                    size = sum(s for _, s in combo)
                    if size < max_nodes:
                        options.append((tuple((rel, form) for form, _ in combo), size))
            per_relation.append(options)
        for choice in itertools.product(*per_relation):
            size = 1 + sum(s for _, s in choice)
            if size <= max_nodes:
                found.append(((word, tuple(sorted(e for edges, _ in choice for e in edges))), size))
    return found


def tree_from_form(form: tuple) -> RelationTree:
    """Build a relation tree from a canonical form, indexing nodes in preorder."""
    edges = []
    counter = itertools.count(1)

    def build(f):
        node = WordOccurrence(f[0], next(counter))
        for rel, child in f[1]:
            edges.append(RelationEdge(rel, node, build(child)))
        return node

    root = build(form)
    return RelationTree(root, edges)


def enumerate_trees(m: MonolingualModel, depth: int, max_nodes: int = None) -> Iterator[RelationTree]:
    """Every tree over the model vocabulary with at most ``depth`` levels, up to re-indexing.

    Heads draw from their own relation alphabet with at most n_max
    dependents per relation.
    """
    max_nodes = max_nodes or math.inf
    for form, _ in _forms(m, depth, max_nodes):
        yield tree_from_form(form)


def random_tree(rng: np.random.Generator, vocabulary: Sequence[str], relations: Sequence[str],
                max_edges: int) -> RelationTree:
    n = int(rng.integers(1, max_edges + 2))
    nodes = [WordOccurrence(str(rng.choice(vocabulary)), i + 1) for i in range(n)]
    edges = [RelationEdge(str(rng.choice(relations)), nodes[int(rng.integers(0, i))], nodes[i]) for i in range(1, n)]
    return RelationTree(nodes[0], edges)


def _mirror_rule(shape: UnlabeledGraph, rename: Dict[str, str]) -> Tuple[UnlabeledGraph, tuple]:
    target = frozenset((rename[rel], "t" + a, "t" + b) for rel, a, b in shape.edges)
    return UnlabeledGraph(target), tuple(("t" + n, n) for n in shape.nodes)


def _flip_rule(shape: UnlabeledGraph, rename: Dict[str, str], pivot: str) -> Tuple[UnlabeledGraph, tuple]:
    """The dependent ``pivot`` becomes the target head of the former head and its siblings."""
    root = shape.local_root()
    edges = []
    for rel, _, b in shape.edges:
        edges.append((rename[rel], "t" + pivot, "t" + (root if b == pivot else b)))
    return UnlabeledGraph(frozenset(edges)), tuple(("t" + n, n) for n in shape.nodes)


def random_transfer_instance(rng: np.random.Generator) -> Tuple[RelationTree, TransferModel]:
    """A source tree of at most three edges and a normalized model with rules for its shapes."""
    source_words, target_words = ("a", "b", "c"), ("x", "y", "z")
    rename = {"r": "p", "s": "q"}
    c_s = random_tree(rng, source_words, tuple(rename), 3)

    lexical = {}
    for word in source_words:
        count = int(rng.integers(1, 3))
        options = rng.choice(target_words, size=count, replace=False)
        for target, p in zip(options, _dirichlet(rng, count)):
            lexical[word, Multiset.from_iterable([str(target)])] = p

    rules = []
    shapes = {}
    for h in c_s.sorted_nodes:
        local = c_s.local_edges(h)
        if local:
            names = {e.dependent: f"d{i}" for i, e in enumerate(local, 1)}
            shape = UnlabeledGraph(frozenset((e.relation, "h", names[e.dependent]) for e in local))
            shapes.setdefault(shape.label_multiset, shape)
    for number, shape in enumerate(shapes.values()):
        candidates = [_mirror_rule(shape, rename)]
        candidates += [_flip_rule(shape, rename, d) for d in shape.nodes if d != "h"]
        count = min(len(candidates), int(rng.integers(1, 4)))
        picked = rng.choice(len(candidates), size=count, replace=False)
        for i, p in zip(sorted(int(j) for j in picked), _dirichlet(rng, count)):
            target, alignment = candidates[i]
            rules.append(StructuralRule(f"r{number}{i}", shape, target, alignment, p))
    return c_s, TransferModel(lexical, tuple(rules))


# Suites

def lm_suite(seed: int) -> SuiteReport:
    """Sentence probabilities, ordering normalization and truncation mass on a random model."""
    report = SuiteReport("lm")
    m = random_monolingual_model(np.random.default_rng(seed))
    m.check_normalization()
    for length in range(1, 5):
        for words in itertools.product(m.vocabulary, repeat=length):
            report.record(f"P({' '.join(words)})", oracle.oracle_sentence_prob(words, m), score_sentence(words, m))
    for tree in enumerate_trees(m, 4, max_nodes=4):
        total = math.fsum(p for _, p in enumerate_linearizations(tree, m))
        report.record(f"ordering mass of {tree.serialize()}", 1.0, total)
    mass = math.fsum(score_content(tree, m) for tree in enumerate_trees(m, 3))
    report.record("content mass to depth 3", oracle.truncated_mass(m, 3), mass)
    return report


def transfer_suite(seed: int, instances: int = 20) -> SuiteReport:
    """score_translation against the oracle and against summed translate output."""
    report = SuiteReport("transfer")
    rng = np.random.default_rng(seed)
    for number in range(instances):
        c_s, tm = random_transfer_instance(rng)
        tm.check_normalization()
        classes = defaultdict(list)
        for tree, _, lp in log_translations(c_s, tm):
            classes[tree.canonical_form()].append((tree, logprob.exp(lp)))
        for members in classes.values():
            rep = members[0][0]
            report.record(f"instance {number}: class mass of {rep.serialize()}",
                          math.fsum(p for _, p in members), score_translation(rep, c_s, tm))
        targets = [tree for tree, _, _ in translate(c_s, tm, 10)]
        if c_s.edges:
            # one tree no derivation reaches
            targets.append(RelationTree(WordOccurrence("x", 1), [RelationEdge("p", WordOccurrence("x", 1),
                                                                              WordOccurrence("y", 2))]))
        for c_t in targets:
            if len(c_t) > config.ORACLE_BOUND:
                continue
            report.record(f"instance {number}: {c_t.serialize()} <- {c_s.serialize()}",
                          oracle.oracle_translation_prob(c_t, c_s, tm), score_translation(c_t, c_s, tm))
    return report


def _same_order(a, b) -> bool:
    return [r.target_words for r in a] == [r.target_words for r in b]


def decode_suite(seed: int, data_dir: Path = None) -> SuiteReport:
    """Decoder marginals, argmax and acoustic shift invariance on the bundled toy data."""
    report = SuiteReport("decode")
    data_dir = Path(data_dir or config.DATA_DIR) / "toy"
    bitext = tools.read_bitext(data_dir / "en_fr.bitext")
    src = estimate_monolingual([r.source for r in bitext])
    tgt = estimate_monolingual([r.target for r in bitext])
    tm = estimate_transfer(bitext)
    hyps = tools.read_nbest(data_dir / "nbest.txt")
    rng = np.random.default_rng(seed)
    order = [int(i) for i in rng.permutation(len(hyps))]
    hyps = [hyps[i] for i in order]

    decoder = Decoder(src, tm, tgt)
    chains = decoder.chains(hyps)
    marginals = {r.target_words: r.probability for r in rank(chains, "sum", len(chains) or 1)}
    expected = oracle.oracle_decode(hyps, src, tm, tgt)
    for words in sorted(set(expected) | set(marginals)):
        report.record(f"marginal of {' '.join(words)}", expected.get(words, 0.0), marginals.get(words, 0.0))

    best = rank(chains, "max", 1)
    oracle_best = oracle.oracle_chains(hyps, src, tm, tgt)
    if best and oracle_best:
        report.record("max chain probability", oracle_best[0][2], best[0].probability)
        report.check("max-mode argmax string", best[0].target_words == oracle_best[0][0])
    else:
        report.check("both decoders find a chain", bool(best) == bool(oracle_best))

    shifted = [RecognitionHypothesis(h.words, h.acoustic_score + 5.0) for h in hyps]
    for mode in config.MODES:
        before = decoder.decode(hyps, len(chains) or 1, mode)
        after = Decoder(src, tm, tgt).decode(shifted, len(chains) or 1, mode)
        report.check(f"{mode}-mode ranking invariant under acoustic shift", _same_order(before, after))
    return report


def run_suite(name: str, seed: int = 0, data_dir: Path = None) -> SuiteReport:
    if name == "lm":
        return lm_suite(seed)
    if name == "transfer":
        return transfer_suite(seed)
    if name == "decode":
        return decode_suite(seed, data_dir)
    raise MalformedInput(f"unknown suite {name!r}; expected one of {SUITES} or 'all'")


def verify(suite: str = "all", seed: int = 0, data_dir: Path = None) -> List[SuiteReport]:
    """
    Run oracle comparison suites.

    Args:
        suite: "all" or one suite name
        seed: Seed for the random instances
        data_dir: Directory holding the toy data (defaults to config.DATA_DIR)

    Returns:
        One SuiteReport per suite run

    Raises:
        VerificationFailure: some comparison exceeded the tolerance
    """
    names = SUITES if suite == "all" else (suite,)
    reports = []
    for name in names:
        logger.info("running %s suite (seed %d)", name, seed)
        reports.append(run_suite(name, seed, data_dir))
    failed = [r for r in reports if not r.passed]
    if failed:
        details = "; ".join(f"{r.name}: {r.failures[0]}" for r in failed)
        error = VerificationFailure(f"{len(failed)} suite(s) failed: {details}")
        error.reports = reports
        raise error
    return reports
