"""Transfer model - P(C_t|C_s) from lexical multisets and local-tree derivation steps."""

import itertools
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterator, List, Mapping, Optional, Sequence, Tuple

from dependency_translator import logprob
from dependency_translator.config import config
from dependency_translator.errors import GraphError, MalformedInput, NormalizationError, TooLarge
from dependency_translator.graph import (
    Alignment,
    Multiset,
    RelationEdge,
    RelationTree,
    UnlabeledGraph,
    WordOccurrence,
    isomorphisms,
    validate_tree,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StructuralRule:
    """Derivation step parameter P(T'|S', f_i).

    ``node_alignment`` holds (target shape node, source shape node) pairs and
    must be total on the target shape's nodes.
    """

    rule_id: str
    source_shape: UnlabeledGraph
    target_shape: UnlabeledGraph
    node_alignment: Tuple[Tuple[str, str], ...]
    probability: float

    def __post_init__(self):
        object.__setattr__(self, "node_alignment", tuple(sorted(self.node_alignment)))
        if not self.source_shape.edges or self.source_shape.local_root() is None:
            raise MalformedInput(f"rule {self.rule_id}: source shape {self.source_shape} is not a local tree")
        mapping = dict(self.node_alignment)
        if len(mapping) != len(self.node_alignment):
            raise MalformedInput(f"rule {self.rule_id}: a target node is aligned twice")
        if set(mapping) != set(self.target_shape.nodes):
            raise MalformedInput(f"rule {self.rule_id}: alignment must cover exactly the target shape nodes")
        stray = set(mapping.values()) - set(self.source_shape.nodes)
        if stray:
            raise MalformedInput(f"rule {self.rule_id}: alignment image {sorted(stray)} outside the source shape")
        if not 0.0 <= self.probability <= 1.0:
            raise MalformedInput(f"rule {self.rule_id}: probability {self.probability} outside [0, 1]")

    @property
    def alignment_map(self) -> Dict[str, str]:
        return dict(self.node_alignment)

    @property
    def shape_key(self) -> Multiset:
        """Local-tree shapes are identified up to isomorphism by their label multiset."""
        return self.source_shape.label_multiset

    @property
    def alignment_text(self) -> str:
        return ",".join(f"{t}>{s}" for t, s in self.node_alignment) or "-"

    @property
    def sort_key(self) -> Tuple[str, str, str]:
        return (str(self.source_shape), str(self.target_shape), self.alignment_text)


@dataclass(frozen=True)
class TransferModel:
    """
    Lexical table P(M|w) over target-word multisets plus structural rules.

    ``reverse`` optionally carries a separately estimated model for the
    target-to-source direction.
    """

    lexical: Mapping[Tuple[str, Multiset], float] = field(default_factory=dict)
    rules: Tuple[StructuralRule, ...] = ()
    reverse: Optional["TransferModel"] = None

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))

    @cached_property
    def _lexicon(self) -> Dict[str, Tuple[Tuple[Multiset, float], ...]]:
        table = defaultdict(list)
        for (word, multiset), p in self.lexical.items():
            if p > 0:
                table[word].append((multiset, p))
        return {w: tuple(sorted(opts, key=lambda o: o[0].counts)) for w, opts in table.items()}

    @cached_property
    def _rules_by_shape(self) -> Dict[Multiset, Tuple[StructuralRule, ...]]:
        table = defaultdict(list)
        for rule in self.rules:
            if rule.probability > 0:
                table[rule.shape_key].append(rule)
        return dict(table)

    def lexical_prob(self, word: str, multiset: Multiset) -> float:
        return self.lexical.get((word, multiset), 0.0)

    def lexical_options(self, word: str) -> Tuple[Tuple[Multiset, float], ...]:
        """Target multisets with positive probability for ``word``."""
        return self._lexicon.get(word, ())

    def rules_for_shape(self, shape: Multiset) -> Tuple[StructuralRule, ...]:
        return self._rules_by_shape.get(shape, ())

    def check_normalization(self, tolerance: float = None):
        tolerance = config.TOLERANCE if tolerance is None else tolerance
        groups = defaultdict(list)
        for (word, _), p in self.lexical.items():
            groups[word].append(p)
        for word in sorted(groups):
            total = math.fsum(groups[word])
            if abs(total - 1.0) > tolerance:
                raise NormalizationError("lexical", word, total)
        groups = defaultdict(list)
        for rule in self.rules:
            groups[rule.shape_key].append(rule.probability)
        for shape in sorted(groups, key=lambda s: s.counts):
            total = math.fsum(groups[shape])
            if abs(total - 1.0) > tolerance:
                raise NormalizationError("rule", str(shape), total)
        if self.reverse is not None:
            self.reverse.check_normalization(tolerance)
        return True


@dataclass(frozen=True)
class DerivationStep:
    """One applicable rule: h_i maps source shape nodes onto S_i, g_i maps T_i onto the target shape."""

    rule: StructuralRule
    source_isomorphism: Mapping[str, WordOccurrence]
    target_isomorphism: Mapping[WordOccurrence, str]
    produced: FrozenSet[RelationEdge]


@dataclass(frozen=True)
class TransferDerivation:
    alignment: Alignment
    steps: Tuple[Tuple[Tuple[RelationEdge, ...], DerivationStep], ...]

    @property
    def produced(self) -> FrozenSet[RelationEdge]:
        return frozenset().union(*(step.produced for _, step in self.steps))

    def log_probability(self) -> float:
        return logprob.log_product(logprob.log(step.rule.probability) for _, step in self.steps)


def _check_size(what: str, size: int):
    if size > config.ENUMERATION_BOUND:
        raise TooLarge(what, size, config.ENUMERATION_BOUND)


def partition_source(c_s: RelationTree) -> List[Tuple[RelationEdge, ...]]:
    """The local-tree edge sets of ``c_s``, one per internal node, by head index."""
    return [c_s.local_edges(h) for h in c_s.sorted_nodes if c_s.local_edges(h)]


def log_lexical_score(f: Alignment, source_nodes, target_nodes, tm: TransferModel) -> float:
    f.check(target_nodes, source_nodes)
    total = 0.0
    for w in sorted(source_nodes, key=lambda o: o.sort_key):
        total += logprob.log(tm.lexical_prob(w.word, f.inverse_words(w)))
        if total == logprob.NEG_INF:
            break
    return total


def lexical_score(f: Alignment, source_nodes, target_nodes, tm: TransferModel) -> float:
    """P(N_t, f | N_s) = Π_w P(words of f^-1(w) | w)."""
    return logprob.exp(log_lexical_score(f, source_nodes, target_nodes, tm))


def applicable_steps(s_i: Sequence[RelationEdge], f: Alignment, target_nodes,
                     tm: TransferModel) -> List[DerivationStep]:
    """Every rule application on the source local tree ``s_i`` compatible with ``f``.

    A step maps each target shape node u to a distinct target occurrence v
    with f(v) = h_i(f_i(u)). Witnesses producing the same edges under the same
    rule count once.
    """
    s_i = tuple(s_i)
    inverse = defaultdict(list)
    for v in sorted(target_nodes, key=lambda o: o.sort_key):
        inverse[f[v]].append(v)

    shape = Multiset.from_iterable(e.relation for e in s_i)
    steps = []
    seen = set()
    for rule in tm.rules_for_shape(shape):
        f_i = rule.alignment_map
        shape_nodes = rule.target_shape.nodes
        for h_i in isomorphisms(rule.source_shape, s_i):
            pools = [inverse.get(h_i[f_i[u]], ()) for u in shape_nodes]
            for choice in itertools.product(*pools):
                if len(set(choice)) != len(choice):
                    continue
                phi = dict(zip(shape_nodes, choice))
                produced = frozenset(RelationEdge(rel, phi[a], phi[b]) for rel, a, b in rule.target_shape.edges)
                if (rule, produced) in seen:
                    continue
                seen.add((rule, produced))
                steps.append(DerivationStep(rule, h_i, {v: u for u, v in phi.items()}, produced))
    return steps


def aligned_form(c_t: RelationTree, f: Alignment) -> tuple:
    """Canonical form of ``c_t`` with every node marked by its aligned source occurrence.

    Two alignments of the same tree share a form exactly when a target
    automorphism carries one onto the other.
    """
    def form(h):
        children = sorted((e.relation, form(e.dependent)) for e in c_t.local_edges(h))
        return (h.word, f[h].sort_key, tuple(children))

    return form(c_t.root)


def _candidate_alignments(c_t: RelationTree, c_s: RelationTree, tm: TransferModel) -> Iterator[Alignment]:
    """Alignments consistent with some positive lexical multiset; all others score 0."""
    targets = c_t.sorted_nodes
    pools = []
    for v in targets:
        pool = [w for w in c_s.sorted_nodes
                if any(m.count(v.word) for m, _ in tm.lexical_options(w.word))]
        if not pool:
            return
        pools.append(pool)
    for image in itertools.product(*pools):
        yield Alignment(tuple(zip(targets, image)))


def _log_structural(partitions, f: Alignment, target_nodes, target_edges, tm: TransferModel) -> float:
    """log P(E_t | N_t, f, C_s): sum over derivations whose T_i partition ``target_edges``."""
    options = []
    for s_i in partitions:
        steps = [st for st in applicable_steps(s_i, f, target_nodes, tm) if st.produced <= target_edges]
        if not steps:
            return logprob.NEG_INF
        options.append(steps)
    totals = []
    for combo in itertools.product(*options):
        produced = [st.produced for st in combo]
        union = frozenset().union(*produced)
        if sum(len(p) for p in produced) != len(union) or union != target_edges:
            continue
        totals.append(logprob.log_product(logprob.log(st.rule.probability) for st in combo))
    return logprob.log_sum(totals)


def log_score_translation(c_t: RelationTree, c_s: RelationTree, tm: TransferModel) -> float:
    _check_size("target tree", len(c_t))
    _check_size("source tree", len(c_s))
    partitions = partition_source(c_s)
    totals = []
    seen = set()
    for f in _candidate_alignments(c_t, c_s, tm):
        key = aligned_form(c_t, f)
        if key in seen:
            continue
        seen.add(key)
        lexical = log_lexical_score(f, c_s.nodes, c_t.nodes, tm)
        if lexical == logprob.NEG_INF:
            continue
        structural = _log_structural(partitions, f, c_t.nodes, c_t.edges, tm)
        if structural != logprob.NEG_INF:
            totals.append(lexical + structural)
    return logprob.log_sum(totals)


def score_translation(c_t: RelationTree, c_s: RelationTree, tm: TransferModel) -> float:
    """P(C_t|C_s) = Σ_f P(N_t, f|N_s) P(E_t|N_t, f, C_s).

    ``c_t`` stands for its whole re-indexing class, so alignments that differ
    only by an automorphism of ``c_t`` describe one outcome and count once.
    """
    return logprob.exp(log_score_translation(c_t, c_s, tm))


def derivations(c_s: RelationTree, tm: TransferModel) -> Iterator[Tuple[RelationTree, float, TransferDerivation]]:
    """Every derivation from ``c_s`` whose target edges form a tree.

    Yields (target tree, log lexical score, derivation). Target occurrences are
    indexed in order of (source index, target word).
    """
    _check_size("source tree", len(c_s))
    sources = c_s.sorted_nodes
    lexical_options = [tm.lexical_options(w.word) for w in sources]
    partitions = partition_source(c_s)
    discarded = 0

    for choice in itertools.product(*lexical_options):
        pairs = sorted((w.index, word, w) for w, (multiset, _) in zip(sources, choice) for word in multiset.elements())
        if not pairs:
            continue
        targets = [WordOccurrence(word, i + 1) for i, (_, word, _) in enumerate(pairs)]
        f = Alignment(tuple((t, w) for t, (_, _, w) in zip(targets, pairs)))
        log_lexical = logprob.log_product(logprob.log(p) for _, p in choice)

        step_options = [applicable_steps(s_i, f, targets, tm) for s_i in partitions]
        for combo in itertools.product(*step_options):
            produced = [st.produced for st in combo]
            union = frozenset().union(*produced)
            if sum(len(p) for p in produced) != len(union):
                continue
            try:
                tree = validate_tree(targets, union)
            except GraphError:
                discarded += 1
                continue
            yield tree, log_lexical, TransferDerivation(f, tuple(zip(partitions, combo)))

    if discarded:
        logger.debug("discarded %d derivations whose target edges are not a tree", discarded)


def log_translations(c_s: RelationTree, tm: TransferModel) -> List[Tuple[RelationTree, Alignment, float]]:
    """Every (C_t, f) reachable from ``c_s`` with log P(C_t, f|C_s), best first.

    Derivations whose outcomes differ only by relabeling interchangeable
    target occurrences are one outcome; the first tree found represents it.
    """
    scores = {}
    for tree, log_lexical, derivation in derivations(c_s, tm):
        key = aligned_form(tree, derivation.alignment)
        rep, f, values = scores.setdefault(key, (tree, derivation.alignment, []))
        if tree.edges == rep.edges:
            values.append(log_lexical + derivation.log_probability())
    ranked = [(tree, f, logprob.log_sum(values)) for tree, f, values in scores.values()]
    ranked = [item for item in ranked if item[2] != logprob.NEG_INF]
    ranked.sort(key=lambda item: (-item[2], item[0].serialize(), str(item[1])))
    return ranked


def translate(c_s: RelationTree, tm: TransferModel, k: int) -> List[Tuple[RelationTree, Alignment, float]]:
    """The ``k`` most probable target trees with their alignments under P(C_t, f|C_s)."""
    if k < 1:
        raise MalformedInput(f"k must be positive, got {k}")
    return [(tree, f, logprob.exp(lp)) for tree, f, lp in log_translations(c_s, tm)[:k]]
