"""Estimation - relative-frequency parameter tables from annotated corpora."""

import itertools
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from dependency_translator.errors import (
    EmptyCorpus,
    MalformedInput,
    NonProjective,
    NonProjectiveRecord,
    UndecomposableRecord,
)
from dependency_translator.graph import (
    Alignment,
    Multiset,
    RelationEdge,
    RelationTree,
    UnlabeledGraph,
    WordOccurrence,
    distinct_permutations,
    sequence_multiset,
)
from dependency_translator.models.monolingual import MonolingualModel, induced_sequences
from dependency_translator.models.transfer import StructuralRule, TransferModel, partition_source

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TreebankRecord:
    """A word string (occurrences in surface order) with its relation tree."""

    occurrences: Tuple[WordOccurrence, ...]
    tree: RelationTree

    def __post_init__(self):
        object.__setattr__(self, "occurrences", tuple(self.occurrences))

    @property
    def words(self) -> Tuple[str, ...]:
        return tuple(o.word for o in self.occurrences)


@dataclass(frozen=True)
class BitextRecord:
    source: TreebankRecord
    target: TreebankRecord
    alignment: Alignment

    def __post_init__(self):
        self.alignment.check(self.target.tree.nodes, self.source.tree.nodes)


def _normalise(counts: Dict, support: Iterable, lam: float) -> Dict:
    """(count + λ) / (total + λ |support|) over ``support``."""
    support = list(support)
    total = sum(counts.get(key, 0) for key in support) + lam * len(support)
    return {key: (counts.get(key, 0) + lam) / total for key in support}


@dataclass
class MonolingualCounts:
    """Sufficient statistics of a treebank shard; ``+`` merges shards."""

    top: Counter = field(default_factory=Counter)
    dependency: Counter = field(default_factory=Counter)
    # (head word, ((relation, n), ...)) per head instance, leaves included
    profiles: Counter = field(default_factory=Counter)
    sequencing: Counter = field(default_factory=Counter)

    def __add__(self, other: "MonolingualCounts") -> "MonolingualCounts":
        return MonolingualCounts(
            self.top + other.top,
            self.dependency + other.dependency,
            self.profiles + other.profiles,
            self.sequencing + other.sequencing,
        )

    @classmethod
    def from_records(cls, records: Iterable[TreebankRecord], first: int = 1) -> "MonolingualCounts":
        counts = cls()
        for number, record in enumerate(records, first):
            try:
                linearization = induced_sequences(record.occurrences, record.tree)
            except NonProjective as exc:
                raise NonProjectiveRecord(number, exc) from exc
            tree = record.tree
            counts.top[tree.root.word] += 1
            for h in tree.sorted_nodes:
                edges = tree.local_edges(h)
                for edge in edges:
                    counts.dependency[h.word, edge.relation, edge.dependent.word] += 1
                profile = tuple(sorted(Counter(e.relation for e in edges).items()))
                counts.profiles[h.word, profile] += 1
                counts.sequencing[linearization.sequences[h]] += 1
        return counts

    def estimate(self, lam: float = 0.0, n_max: Optional[int] = None) -> MonolingualModel:
        if lam < 0:
            raise MalformedInput(f"smoothing lambda must be nonnegative, got {lam}")
        vocabulary = sorted({word for word, _ in self.profiles})

        top = _normalise(self.top, vocabulary if lam > 0 else sorted(self.top), lam)

        groups = defaultdict(dict)
        for (head, rel, word), c in self.dependency.items():
            groups[head, rel][word] = c
        dependency = {}
        for (head, rel), observed in sorted(groups.items()):
            support = vocabulary if lam > 0 else sorted(observed)
            for word, p in _normalise(observed, support, lam).items():
                dependency[head, rel, word] = p

        alphabet = defaultdict(set)
        observed_max = 0
        for (head, profile), _ in self.profiles.items():
            for rel, n in profile:
                alphabet[head].add(rel)
                observed_max = max(observed_max, n)
        if n_max is None:
            n_max = observed_max
        elif observed_max > n_max:
            raise MalformedInput(f"corpus has a head with {observed_max} same-relation dependents, above n_max={n_max}")

        detail = {}
        for head in sorted(alphabet):
            for rel in sorted(alphabet[head]):
                observed = Counter()
                for (word, profile), c in self.profiles.items():
                    if word == head:
                        observed[dict(profile).get(rel, 0)] += c
                support = range(n_max + 1) if lam > 0 else sorted(observed)
                for n, p in _normalise(observed, support, lam).items():
                    detail[head, rel, n] = p

        by_multiset = defaultdict(dict)
        for s, c in self.sequencing.items():
            by_multiset[sequence_multiset(s)][s] = c
        sequencing = {}
        for multiset, observed in sorted(by_multiset.items(), key=lambda item: item[0].counts):
            support = distinct_permutations(multiset.elements()) if lam > 0 else sorted(observed)
            sequencing.update(_normalise(observed, support, lam))

        model = MonolingualModel(top, dependency, detail, sequencing)
        model.check_normalization()
        logger.info("estimated monolingual model: %d words, %d dependency, %d detail, %d sequencing parameters",
                    len(vocabulary), len(dependency), len(detail), len(sequencing))
        return model


def estimate_monolingual(corpus: Sequence[TreebankRecord], lam: float = 0.0,
                         n_max: Optional[int] = None) -> MonolingualModel:
    """
    Relative-frequency monolingual model from a treebank.

    Args:
        corpus: Projective treebank records
        lam: Add-λ smoothing over the observed vocabulary and alphabet
        n_max: Maximum dependents per relation; inferred from the corpus when omitted

    Returns:
        A normalized MonolingualModel
    """
    if not corpus:
        raise EmptyCorpus("cannot estimate a monolingual model from an empty corpus")
    return MonolingualCounts.from_records(corpus).estimate(lam, n_max)


def _decompose(number: int, source: RelationTree, target: RelationTree,
               f: Alignment) -> Dict[WordOccurrence, List[RelationEdge]]:
    """Assign every target edge to the source local tree (by head) that must produce it."""
    groups = defaultdict(list)
    for edge in sorted(target.edges, key=lambda e: e.sort_key):
        a, b = f[edge.head], f[edge.dependent]
        if a == b:
            if source.local_edges(a):
                owner = a
            elif source.head_edge(a) is not None:
                owner = source.head_edge(a).head
            else:
                raise UndecomposableRecord(number, edge, f"aligns to {a}, which heads no local tree")
        else:
            up_a, up_b = source.head_edge(a), source.head_edge(b)
            if up_b is not None and up_b.head == a:
                owner = a
            elif up_a is not None and up_a.head == b:
                owner = b
            elif up_a is not None and up_b is not None and up_a.head == up_b.head:
                owner = up_a.head
            else:
                raise UndecomposableRecord(number, edge, f"links {a} and {b}, which share no local tree")
        groups[owner].append(edge)
    return groups


def canonical_rule(s_i: Sequence[RelationEdge], t_i: Sequence[RelationEdge],
                   f: Alignment) -> Tuple[UnlabeledGraph, UnlabeledGraph, Tuple[Tuple[str, str], ...]]:
    """Strip words from a (S_i, T_i, f) step and name its nodes canonically.

    The source root is ``h``, dependents ``d1..dk`` in label order, target
    nodes ``t1..tm`` in order of their aligned source name; ties are broken
    by taking the smallest serialisation.
    """
    head = s_i[0].head
    dependents = sorted((e.dependent for e in s_i), key=lambda o: o.sort_key)
    relation_of = {e.dependent: e.relation for e in s_i}
    target_nodes = sorted({o for e in t_i for o in (e.head, e.dependent)}, key=lambda o: o.sort_key)

    best = None
    for dep_order in itertools.permutations(dependents):
        labels = [relation_of[d] for d in dep_order]
        if labels != sorted(labels):
            continue
        s_name = {head: "h", **{d: f"d{i}" for i, d in enumerate(dep_order, 1)}}
        src = tuple(sorted((relation_of[d], "h", s_name[d]) for d in dep_order))

        by_image = defaultdict(list)
        for v in target_nodes:
            by_image[s_name[f[v]]].append(v)
        images = sorted(by_image)
        for group_orders in itertools.product(*(itertools.permutations(by_image[i]) for i in images)):
            ordered = [v for group in group_orders for v in group]
            t_name = {v: f"t{i}" for i, v in enumerate(ordered, 1)}
            tgt = tuple(sorted((e.relation, t_name[e.head], t_name[e.dependent]) for e in t_i))
            align = tuple(sorted((t_name[v], s_name[f[v]]) for v in ordered))
            candidate = (src, tgt, align)
            if best is None or candidate < best:
                best = candidate
    src, tgt, align = best
    return UnlabeledGraph(frozenset(src)), UnlabeledGraph(frozenset(tgt)), align


@dataclass
class TransferCounts:
    """Sufficient statistics of a bitext shard; ``+`` merges shards."""

    lexical: Counter = field(default_factory=Counter)
    rules: Counter = field(default_factory=Counter)

    def __add__(self, other: "TransferCounts") -> "TransferCounts":
        return TransferCounts(self.lexical + other.lexical, self.rules + other.rules)

    @classmethod
    def from_records(cls, records: Iterable[BitextRecord], first: int = 1) -> "TransferCounts":
        counts = cls()
        for number, record in enumerate(records, first):
            source, target, f = record.source.tree, record.target.tree, record.alignment
            for w in source.sorted_nodes:
                counts.lexical[w.word, f.inverse_words(w)] += 1
            groups = _decompose(number, source, target, f)
            for s_i in partition_source(source):
                counts.rules[canonical_rule(s_i, groups.pop(s_i[0].head, ()), f)] += 1
        return counts

    def estimate(self, lam: float = 0.0) -> TransferModel:
        if lam < 0:
            raise MalformedInput(f"smoothing lambda must be nonnegative, got {lam}")
        multisets = sorted({m for _, m in self.lexical}, key=lambda m: m.counts)
        groups = defaultdict(dict)
        for (word, multiset), c in self.lexical.items():
            groups[word][multiset] = c
        lexical = {}
        for word, observed in sorted(groups.items()):
            support = multisets if lam > 0 else sorted(observed, key=lambda m: m.counts)
            for multiset, p in _normalise(observed, support, lam).items():
                lexical[word, multiset] = p

        by_shape = defaultdict(dict)
        for key, c in self.rules.items():
            by_shape[key[0].label_multiset][key] = c
        drafts = []
        for shape, observed in by_shape.items():
            for (src, tgt, align), p in _normalise(observed, list(observed), lam).items():
                drafts.append(StructuralRule("r", src, tgt, align, p))
        drafts.sort(key=lambda r: r.sort_key)
        rules = [StructuralRule(f"r{i:03d}", r.source_shape, r.target_shape, r.node_alignment, r.probability)
                 for i, r in enumerate(drafts, 1)]

        model = TransferModel(lexical, tuple(rules))
        model.check_normalization()
        logger.info("estimated transfer model: %d lexical parameters, %d rules", len(lexical), len(rules))
        return model


def estimate_transfer(corpus: Sequence[BitextRecord], lam: float = 0.0) -> TransferModel:
    """
    Relative-frequency transfer model from an aligned, parsed bitext.

    Args:
        corpus: Bitext records with target-to-source alignments
        lam: Add-λ smoothing over observed multisets and observed rules per shape

    Returns:
        A normalized TransferModel
    """
    if not corpus:
        raise EmptyCorpus("cannot estimate a transfer model from an empty bitext")
    return TransferCounts.from_records(corpus).estimate(lam)
