"""Monolingual model - content model P(C), ordering model P(W|C) and P(W)."""

import itertools
import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Dict, Hashable, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from dependency_translator import logprob
from dependency_translator.config import config
from dependency_translator.errors import (
    MalformedInput,
    NodeMismatch,
    NonProjective,
    NormalizationError,
    TooLarge,
)
from dependency_translator.graph import (
    HEAD_MARKER,
    RelationEdge,
    RelationTree,
    WordOccurrence,
    distinct_permutations,
    sequence_multiset,
)

logger = logging.getLogger(__name__)

Words = Tuple[str, ...]


@dataclass(frozen=True)
class MonolingualModel:
    """
    Head-lexicalized monolingual model made of four parameter tables:

        top:        word -> P(Top(h))
        dependency: (head, relation, dependent) -> P(r(h,w) | h, r)
        detail:     (head, relation, n) -> P(N(r,n) | h)
        sequencing: label sequence with one "e" -> P(s | M(s))

    A head word's relation alphabet is the set of relations with detail
    entries for it; relations outside it have P(N(r,0)|h) = 1.
    """

    top: Mapping[str, float] = field(default_factory=dict)
    dependency: Mapping[Tuple[str, str, str], float] = field(default_factory=dict)
    detail: Mapping[Tuple[str, str, int], float] = field(default_factory=dict)
    sequencing: Mapping[Tuple[str, ...], float] = field(default_factory=dict)

    def __post_init__(self):
        for s in self.sequencing:
            sequence_multiset(s)
        for head, rel, n in self.detail:
            if n < 0:
                raise MalformedInput(f"detail count for ({head}, {rel}) must be nonnegative, got {n}")

    @cached_property
    def _head_relations(self) -> Dict[str, Tuple[str, ...]]:
        table = defaultdict(set)
        for head, rel, _ in self.detail:
            table[head].add(rel)
        return {h: tuple(sorted(rs)) for h, rs in table.items()}

    @cached_property
    def _candidates(self) -> Dict[Tuple[str, str], Tuple[str, ...]]:
        table = defaultdict(set)
        for (head, rel, word), p in self.dependency.items():
            if p > 0:
                table[head, word].add(rel)
        return {k: tuple(sorted(rs)) for k, rs in table.items()}

    def relations_for(self, head_word: str) -> Tuple[str, ...]:
        return self._head_relations.get(head_word, ())

    def candidate_relations(self, head_word: str, dependent_word: str) -> Tuple[str, ...]:
        """Relations r with a positive P(r(h,w)|h,r); every other label scores 0."""
        return self._candidates.get((head_word, dependent_word), ())

    @cached_property
    def relation_alphabet(self) -> Tuple[str, ...]:
        rels = {rel for _, rel, _ in self.dependency} | {rel for _, rel, _ in self.detail}
        return tuple(sorted(rels))

    @cached_property
    def vocabulary(self) -> Tuple[str, ...]:
        words = set(self.top)
        for head, _, word in self.dependency:
            words.update((head, word))
        words.update(head for head, _, _ in self.detail)
        return tuple(sorted(words))

    @property
    def n_max(self) -> int:
        """Largest dependent count with a detail entry."""
        return max((n for _, _, n in self.detail), default=0)

    def top_prob(self, word: str) -> float:
        return self.top.get(word, 0.0)

    def dependency_prob(self, head: str, rel: str, word: str) -> float:
        return self.dependency.get((head, rel, word), 0.0)

    def detail_prob(self, head: str, rel: str, n: int) -> float:
        if rel not in self.relations_for(head):
            return 1.0 if n == 0 else 0.0
        return self.detail.get((head, rel, n), 0.0)

    def sequence_prob(self, s: Sequence[str]) -> float:
        return self.sequencing.get(tuple(s), 0.0)

    def check_normalization(self, tolerance: float = None):
        """Raise NormalizationError for the first table entry group not summing to one."""
        tolerance = config.TOLERANCE if tolerance is None else tolerance

        def check(table: str, groups: Mapping):
            for key in sorted(groups, key=repr):
                total = math.fsum(groups[key])
                if abs(total - 1.0) > tolerance:
                    raise NormalizationError(table, key, total)

        if self.top:
            check("top", {"TOP": list(self.top.values())})
        groups = defaultdict(list)
        for (head, rel, _), p in self.dependency.items():
            groups[head, rel].append(p)
        check("dependency", groups)
        groups = defaultdict(list)
        for (head, rel, _), p in self.detail.items():
            groups[head, rel].append(p)
        check("detail", groups)
        groups = defaultdict(list)
        for s, p in self.sequencing.items():
            groups[sequence_multiset(s)].append(p)
        check("sequencing", groups)
        return True

    # Convenience wrappers

    def score_content(self, c: RelationTree) -> float:
        return score_content(c, self)

    def score_ordering(self, w: Sequence[WordOccurrence], c: RelationTree) -> float:
        return score_ordering(w, c, self)

    def score_sentence(self, words: Sequence[str]) -> float:
        return score_sentence(words, self)


def combinatoric_k(items: Iterable[Hashable]) -> int:
    """Number of distinct ordered tuples realising the multiset ``items``: n! / Π mult!."""
    counts = Counter(items)
    k = math.factorial(sum(counts.values()))
    for mult in counts.values():
        k //= math.factorial(mult)
    return k


def log_score_expansion(h: WordOccurrence, edges: Iterable[RelationEdge], m: MonolingualModel,
                        dependent_form: Optional[Callable[[WordOccurrence], Hashable]] = None) -> float:
    """log P(E(h)|h). ``dependent_form`` decides which dependents are interchangeable
    for the combinatoric constant; by default the dependent's word."""
    dependent_form = dependent_form or (lambda o: o.word)
    by_relation = defaultdict(list)
    for edge in edges:
        if edge.head != h:
            raise MalformedInput(f"edge {edge} is not headed by {h}")
        by_relation[edge.relation].append(edge.dependent)

    total = 0.0
    for rel in sorted(set(m.relations_for(h.word)) | set(by_relation)):
        dependents = by_relation.get(rel, [])
        factors = [m.detail_prob(h.word, rel, len(dependents))]
        factors.extend(m.dependency_prob(h.word, rel, d.word) for d in dependents)
        for p in factors:
            total += logprob.log(p)
        if total == logprob.NEG_INF:
            return total
        total += math.log(combinatoric_k(dependent_form(d) for d in dependents))
    return total


def score_expansion(h: WordOccurrence, edges: Iterable[RelationEdge], m: MonolingualModel) -> float:
    return logprob.exp(log_score_expansion(h, edges, m))


def log_score_content(c: RelationTree, m: MonolingualModel) -> float:
    """log P(C) = log P(Top(h0)) + Σ_h log P(E_C(h)|h)."""
    total = logprob.log(m.top_prob(c.root.word))
    for h in c.sorted_nodes:
        if total == logprob.NEG_INF:
            break
        total += log_score_expansion(h, c.local_edges(h), m, c.subtree_form)
    return total


def score_content(c: RelationTree, m: MonolingualModel) -> float:
    return logprob.exp(log_score_content(c, m))


@dataclass(frozen=True)
class Linearization:
    """Per-head local label sequences induced by a word order.

    ``slots[h]`` lists the occurrence filling each position of
    ``sequences[h]``; the head itself fills the "e" position.
    """

    sequences: Mapping[WordOccurrence, Tuple[str, ...]]
    slots: Mapping[WordOccurrence, Tuple[WordOccurrence, ...]]


def induced_sequences(w: Sequence[WordOccurrence], c: RelationTree) -> Linearization:
    """Local label sequences of every head of ``c`` under the order ``w``.

    Raises:
        NodeMismatch: ``w`` is not a permutation of the nodes of ``c``
        NonProjective: some subtree does not occupy a contiguous span of ``w``
    """
    w = tuple(w)
    if len(set(w)) != len(w) or set(w) != c.nodes:
        odd = (set(w) ^ c.nodes) | {o for o, n in Counter(w).items() if n > 1}
        raise NodeMismatch("word order and tree nodes differ", sorted(odd, key=lambda o: o.sort_key))

    position = {o: i for i, o in enumerate(w)}
    for h in c.sorted_nodes:
        span = [position[o] for o in c.subtree_nodes(h)]
        if max(span) - min(span) + 1 != len(span):
            raise NonProjective("subtree is split in the word order", [h])

    sequences = {}
    slots = {}
    for h in c.sorted_nodes:
        items = [(position[h], HEAD_MARKER, h)]
        items.extend((position[e.dependent], e.relation, e.dependent) for e in c.local_edges(h))
        items.sort()
        sequences[h] = tuple(label for _, label, _ in items)
        slots[h] = tuple(o for _, _, o in items)
    return Linearization(sequences, slots)


def log_score_ordering(w: Sequence[WordOccurrence], c: RelationTree, m: MonolingualModel) -> float:
    """log P(W|C) = Σ_h [log P(s_h|M(s_h)) - Σ_r log k(n_r)]."""
    linearization = induced_sequences(w, c)
    total = 0.0
    for h in c.sorted_nodes:
        total += logprob.log(m.sequence_prob(linearization.sequences[h]))
        if total == logprob.NEG_INF:
            return total
        by_relation = defaultdict(list)
        for edge in c.local_edges(h):
            by_relation[edge.relation].append(c.subtree_form(edge.dependent))
        for forms in by_relation.values():
            total -= math.log(combinatoric_k(forms))
    return total


def score_ordering(w: Sequence[WordOccurrence], c: RelationTree, m: MonolingualModel) -> float:
    return logprob.exp(log_score_ordering(w, c, m))


def sequence_given_head(head_word: str, s: Sequence[str], m: MonolingualModel) -> float:
    """P(s|h): detail parameters for the label counts of ``s`` times P(s|M(s))."""
    counts = sequence_multiset(s).as_dict()
    p = m.sequence_prob(s)
    for rel in sorted(set(m.relations_for(head_word)) | (set(counts) - {HEAD_MARKER})):
        p *= m.detail_prob(head_word, rel, counts.get(rel, 0))
    return p


def tree_automorphisms(c: RelationTree) -> int:
    """Number of index permutations mapping ``c`` onto itself."""
    total = 1
    for h in c.sorted_nodes:
        groups = Counter((e.relation, c.subtree_form(e.dependent)) for e in c.local_edges(h))
        for mult in groups.values():
            total *= math.factorial(mult)
    return total


def projective_orders(c: RelationTree) -> Iterator[Tuple[WordOccurrence, ...]]:
    """Every word order of ``c`` in which each subtree is contiguous."""

    def orders(h):
        dependents = [e.dependent for e in c.local_edges(h)]
        child_orders = [list(orders(d)) for d in dependents]
        items = [None] + list(range(len(dependents)))
        for perm in itertools.permutations(items):
            for combo in itertools.product(*child_orders):
                sequence = []
                for i in perm:
                    sequence.extend((h,) if i is None else combo[i])
                yield tuple(sequence)

    yield from orders(c.root)


def _check_size(what: str, size: int, bound: int = None):
    bound = config.ENUMERATION_BOUND if bound is None else bound
    if size > bound:
        raise TooLarge(what, size, bound)


def log_linearizations(c: RelationTree, m: MonolingualModel) -> Dict[Words, float]:
    """log P(u|C) for every distinct word string u realising ``c``.

    Occurrence orders related by an automorphism of ``c`` give the same
    string with the same score, so the summed score is divided by |Aut(C)|.
    """
    _check_size("relation tree", len(c))
    scores = defaultdict(list)
    for order in projective_orders(c):
        scores[tuple(o.word for o in order)].append(log_score_ordering(order, c, m))
    correction = math.log(tree_automorphisms(c))
    result = {}
    for words, values in scores.items():
        total = logprob.log_sum(values)
        result[words] = total - correction if total != logprob.NEG_INF else total
    return result


def enumerate_linearizations(c: RelationTree, m: MonolingualModel) -> List[Tuple[Words, float]]:
    """All distinct word strings of ``c`` with P(W|C), most probable first."""
    scored = [(words, logprob.exp(lp)) for words, lp in log_linearizations(c, m).items()]
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored


@lru_cache(maxsize=None)
def _span_sequences(i: int, j: int) -> Tuple[Tuple[Tuple[int, ...], Tuple[Tuple[int, int], ...]], ...]:
    """Ways to cover positions i..j with adjacent complete subtrees: (tops, arcs)."""
    if i > j:
        return (((), ()),)
    found = []
    for end in range(i, j + 1):
        for head in range(i, end + 1):
            for arcs in _span_subtrees(i, end, head):
                for tops, rest in _span_sequences(end + 1, j):
                    found.append(((head,) + tops, arcs + rest))
    return tuple(found)


@lru_cache(maxsize=None)
def _span_subtrees(i: int, j: int, head: int) -> Tuple[Tuple[Tuple[int, int], ...], ...]:
    """Arc sets of every projective subtree headed at ``head`` spanning exactly i..j."""
    found = []
    for left_tops, left_arcs in _span_sequences(i, head - 1):
        for right_tops, right_arcs in _span_sequences(head + 1, j):
            attach = tuple((head, t) for t in left_tops + right_tops)
            found.append(attach + left_arcs + right_arcs)
    return tuple(found)


def projective_structures(n: int) -> Iterator[Tuple[int, Tuple[Tuple[int, int], ...]]]:
    """Every unlabeled projective tree over positions 0..n-1 as (root, arcs)."""
    for root in range(n):
        for arcs in _span_subtrees(0, n - 1, root):
            yield root, arcs


def clear_span_tables():
    """Drop the memoised span tables; they grow with the longest sentence analysed."""
    _span_sequences.cache_clear()
    _span_subtrees.cache_clear()


def analyses(words: Sequence[str], m: MonolingualModel) -> List[Tuple[RelationTree, float, float]]:
    """Every positioned relation tree for ``words`` with nonzero score.

    Returns (tree, log P(C), log P(W|C)) triples; occurrences take the
    indices 1..n of their positions. Labels are drawn from the relations
    with a positive dependency parameter; every other labeling scores 0.
    """
    words = tuple(words)
    if not words:
        raise MalformedInput("cannot analyse an empty word string")
    _check_size("word string", len(words))
    occurrences = tuple(WordOccurrence(word, i + 1) for i, word in enumerate(words))

    found = []
    for root, arcs in projective_structures(len(words)):
        if m.top_prob(words[root]) <= 0.0:
            continue
        choices = [m.candidate_relations(words[h], words[d]) for h, d in arcs]
        if not all(choices):
            continue
        for labels in itertools.product(*choices):
            edges = [RelationEdge(rel, occurrences[h], occurrences[d]) for rel, (h, d) in zip(labels, arcs)]
            tree = RelationTree(occurrences[root], edges)
            content = log_score_content(tree, m)
            if content == logprob.NEG_INF:
                continue
            ordering = log_score_ordering(occurrences, tree, m)
            if ordering == logprob.NEG_INF:
                continue
            found.append((tree, content, ordering))
    logger.debug("%d nonzero analyses for %r", len(found), " ".join(words))
    return found


def log_score_sentence(words: Sequence[str], m: MonolingualModel) -> float:
    return logprob.log_sum(content + ordering for _, content, ordering in analyses(words, m))


def score_sentence(words: Sequence[str], m: MonolingualModel) -> float:
    """P(W) = Σ_C P(C) P(W|C) by exhaustive projective enumeration."""
    return logprob.exp(log_score_sentence(words, m))


def parse(words: Sequence[str], m: MonolingualModel, k: int) -> List[Tuple[RelationTree, float]]:
    """The ``k`` most probable relation trees for ``words`` under P(C) P(W|C)."""
    if k < 1:
        raise MalformedInput(f"k must be positive, got {k}")
    scored = [(tree, content + ordering) for tree, content, ordering in analyses(words, m)]
    scored.sort(key=lambda item: (-item[1], item[0].serialize()))
    return [(tree, logprob.exp(lp)) for tree, lp in scored[:k]]
