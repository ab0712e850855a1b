"""Relation trees, multisets, unlabeled rule graphs and label-respecting isomorphism.

A relation tree is a set of labeled edges ``r(head, dependent)`` between word
occurrences. Siblings are unordered: two trees are equal when their root and
edge sets are equal, however the edges were stored.
"""

import itertools
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from dependency_translator.errors import (
    Cycle,
    DisconnectedNode,
    DuplicateHeadMarker,
    MalformedInput,
    MissingHeadMarker,
    MultipleHeads,
    MultipleRoots,
    NodeNotInTree,
)

logger = logging.getLogger(__name__)

# Stands for the head itself inside a local label sequence; never an edge label.
HEAD_MARKER = "e"


def _check_token(value: str, what: str):
    if not isinstance(value, str) or not value or any(c.isspace() for c in value):
        raise MalformedInput(f"{what} must be a non-empty token without whitespace, got {value!r}")


@dataclass(frozen=True)
class WordOccurrence:
    """A word together with the index identifying this occurrence."""

    word: str
    index: int

    def __post_init__(self):
        _check_token(self.word, "word")
        if isinstance(self.index, bool) or not isinstance(self.index, int) or self.index < 1:
            raise MalformedInput(f"occurrence index must be a positive integer, got {self.index!r}")

    @property
    def sort_key(self) -> Tuple[int, str]:
        return (self.index, self.word)

    def __str__(self):
        return f"{self.word}:{self.index}"


@dataclass(frozen=True)
class RelationEdge:
    """The atomic proposition ``relation(head, dependent)``."""

    relation: str
    head: WordOccurrence
    dependent: WordOccurrence

    def __post_init__(self):
        _check_token(self.relation, "relation label")
        if self.relation == HEAD_MARKER:
            raise MalformedInput(f"{HEAD_MARKER!r} is reserved for the head marker and cannot label an edge")
        if self.head == self.dependent:
            raise MalformedInput(f"edge {self.relation} links {self.head} to itself")

    @property
    def sort_key(self):
        return (self.head.sort_key, self.relation, self.dependent.sort_key)

    def __str__(self):
        return f"{self.relation}({self.head},{self.dependent})"


@dataclass(frozen=True)
class RelationTree:
    """A directed labeled tree of word occurrences with unordered siblings.

    Construct through :func:`validate_tree` unless the edges are already
    known to form a tree.
    """

    root: WordOccurrence
    edges: FrozenSet[RelationEdge] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "edges", frozenset(self.edges))

    @cached_property
    def nodes(self) -> FrozenSet[WordOccurrence]:
        return frozenset([self.root, *(e.dependent for e in self.edges)])

    @cached_property
    def sorted_nodes(self) -> Tuple[WordOccurrence, ...]:
        return tuple(sorted(self.nodes, key=lambda o: o.sort_key))

    @cached_property
    def _out_edges(self) -> Dict[WordOccurrence, Tuple[RelationEdge, ...]]:
        table = defaultdict(list)
        for edge in self.edges:
            table[edge.head].append(edge)
        return {h: tuple(sorted(es, key=lambda e: e.sort_key)) for h, es in table.items()}

    @cached_property
    def _in_edge(self) -> Dict[WordOccurrence, RelationEdge]:
        return {e.dependent: e for e in self.edges}

    def local_edges(self, h: WordOccurrence) -> Tuple[RelationEdge, ...]:
        """Edges headed by ``h``, in deterministic order."""
        if h not in self.nodes:
            raise NodeNotInTree("occurrence is not a node of the tree", [h])
        return self._out_edges.get(h, ())

    def head_edge(self, dependent: WordOccurrence) -> Optional[RelationEdge]:
        return self._in_edge.get(dependent)

    def subtree_nodes(self, h: WordOccurrence) -> FrozenSet[WordOccurrence]:
        found = {h}
        stack = [h]
        while stack:
            for edge in self._out_edges.get(stack.pop(), ()):
                found.add(edge.dependent)
                stack.append(edge.dependent)
        return frozenset(found)

    @cached_property
    def _forms(self) -> Dict[WordOccurrence, tuple]:
        forms = {}

        def visit(h):
            children = []
            for edge in self._out_edges.get(h, ()):
                visit(edge.dependent)
                children.append((edge.relation, forms[edge.dependent]))
            forms[h] = (h.word, tuple(sorted(children)))

        visit(self.root)
        return forms

    def subtree_form(self, h: WordOccurrence) -> tuple:
        """Index-free canonical form of the subtree headed by ``h``."""
        return self._forms[h]

    def canonical_form(self) -> tuple:
        """Index-free canonical form; equal for trees identical up to re-indexing."""
        return self._forms[self.root]

    def depth(self) -> int:
        """Number of levels; a single node has depth 1."""
        def levels(h):
            return 1 + max((levels(e.dependent) for e in self._out_edges.get(h, ())), default=0)
        return levels(self.root)

    def serialize(self) -> str:
        """Deterministic text used for tie-breaking and diagnostics."""
        if not self.edges:
            return str(self.root)
        return ";".join(str(e) for e in sorted(self.edges, key=lambda e: e.sort_key))

    def __len__(self):
        return len(self.nodes)

    def __str__(self):
        return self.serialize()


def validate_tree(nodes: Iterable[WordOccurrence], edges: Iterable[RelationEdge]) -> RelationTree:
    """Check that ``edges`` form a single rooted tree over ``nodes`` and build it.

    Raises:
        NodeNotInTree: an edge mentions an occurrence outside ``nodes``
        MultipleHeads: an occurrence has more than one incoming edge
        Cycle: the edges contain a directed cycle
        DisconnectedNode: an occurrence takes part in no edge
        MultipleRoots: more than one occurrence has no incoming edge
    """
    nodes = frozenset(nodes)
    edges = frozenset(edges)
    if not nodes:
        raise MalformedInput("a relation tree needs at least one node")

    stray = sorted({o for e in edges for o in (e.head, e.dependent)} - nodes, key=lambda o: o.sort_key)
    if stray:
        raise NodeNotInTree("edge endpoints missing from the node set", stray)

    heads = defaultdict(list)
    for edge in edges:
        heads[edge.dependent].append(edge)
    crowded = sorted((d for d, es in heads.items() if len(es) > 1), key=lambda o: o.sort_key)
    if crowded:
        raise MultipleHeads("occurrences with more than one head", crowded)

    roots = sorted((n for n in nodes if n not in heads), key=lambda o: o.sort_key)
    if not roots:
        raise Cycle("every occurrence has a head", sorted(nodes, key=lambda o: o.sort_key))
    if len(roots) > 1:
        touched = {o for e in edges for o in (e.head, e.dependent)}
        isolated = [n for n in roots if n not in touched]
        if isolated and touched:
            raise DisconnectedNode("occurrences outside every edge", isolated)
        raise MultipleRoots("occurrences without a head", roots)

    tree = RelationTree(roots[0], edges)
    unreachable = sorted(nodes - tree.subtree_nodes(roots[0]), key=lambda o: o.sort_key)
    if unreachable:
        raise Cycle("occurrences on a cycle unreachable from the root", unreachable)
    return tree


def local_edges(tree: RelationTree, h: WordOccurrence) -> Tuple[RelationEdge, ...]:
    return tree.local_edges(h)


@dataclass(frozen=True)
class Multiset:
    """A finite multiset of tokens, stored as sorted (token, count) pairs.

    Used both for relation-label multisets of local sequences and for the
    target-word multisets of lexical transfer parameters.
    """

    counts: Tuple[Tuple[str, int], ...] = ()

    @classmethod
    def from_iterable(cls, items: Iterable[str]) -> "Multiset":
        return cls(tuple(sorted(Counter(items).items())))

    def count(self, item: str) -> int:
        return dict(self.counts).get(item, 0)

    def as_dict(self) -> Dict[str, int]:
        return dict(self.counts)

    def elements(self) -> Tuple[str, ...]:
        return tuple(item for item, n in self.counts for _ in range(n))

    def __len__(self):
        return sum(n for _, n in self.counts)

    def __str__(self):
        return ",".join(self.elements()) or "-"


LabelMultiset = Multiset


def sequence_multiset(s: Sequence[str]) -> Multiset:
    """Label multiset of a local sequence, which must hold exactly one head marker."""
    markers = sum(1 for label in s if label == HEAD_MARKER)
    if markers == 0:
        raise MissingHeadMarker(f"sequence {list(s)} has no {HEAD_MARKER!r}")
    if markers > 1:
        raise DuplicateHeadMarker(f"sequence {list(s)} has {markers} {HEAD_MARKER!r} markers")
    return Multiset.from_iterable(s)


def distinct_permutations(items: Iterable[str]) -> List[Tuple[str, ...]]:
    return sorted(set(itertools.permutations(tuple(items))))


@dataclass(frozen=True)
class UnlabeledGraph:
    """Relation edges over abstract node names; nodes carry no words."""

    edges: FrozenSet[Tuple[str, str, str]] = field(default_factory=frozenset)

    def __post_init__(self):
        edges = frozenset(tuple(e) for e in self.edges)
        for rel, a, b in edges:
            _check_token(rel, "relation label")
            _check_token(a, "node name")
            _check_token(b, "node name")
            if a == b:
                raise MalformedInput(f"edge {rel}({a},{b}) links a node to itself")
        object.__setattr__(self, "edges", edges)

    @cached_property
    def nodes(self) -> Tuple[str, ...]:
        return tuple(sorted({n for _, a, b in self.edges for n in (a, b)}))

    @cached_property
    def sorted_edges(self) -> Tuple[Tuple[str, str, str], ...]:
        return tuple(sorted(self.edges))

    @cached_property
    def label_multiset(self) -> Multiset:
        return Multiset.from_iterable(rel for rel, _, _ in self.edges)

    def local_root(self) -> Optional[str]:
        """The single head of a local tree, or None when the edges are not one."""
        heads = {a for _, a, _ in self.edges}
        dependents = [b for _, _, b in self.edges]
        if len(heads) != 1 or len(set(dependents)) != len(dependents):
            return None
        (root,) = heads
        return None if root in dependents else root

    def __str__(self):
        return ";".join(f"{r}({a},{b})" for r, a, b in self.sorted_edges) or "-"


def _bijections(source_nodes, source_edges, target_nodes, target_edges) -> Iterator[dict]:
    """Yield every bijection preserving edges and labels in both directions.

    With equal edge counts, mapping every source edge into the target edge set
    makes the edge map a bijection, which gives the converse direction.
    """
    if len(source_nodes) != len(target_nodes) or len(source_edges) != len(target_edges):
        return
    if Counter(r for r, _, _ in source_edges) != Counter(r for r, _, _ in target_edges):
        return
    target_set = frozenset(target_edges)
    incident = defaultdict(list)
    for edge in source_edges:
        incident[edge[1]].append(edge)
        incident[edge[2]].append(edge)

    assignment = {}
    used = set()

    def consistent(node):
        for rel, a, b in incident[node]:
            if a in assignment and b in assignment and (rel, assignment[a], assignment[b]) not in target_set:
                return False
        return True

    def extend(i):
        if i == len(source_nodes):
            yield dict(assignment)
            return
        node = source_nodes[i]
        for candidate in target_nodes:
            if candidate in used:
                continue
            assignment[node] = candidate
            used.add(candidate)
            if consistent(node):
                yield from extend(i + 1)
            del assignment[node]
            used.discard(candidate)

    yield from extend(0)


def isomorphisms(g: UnlabeledGraph, h_labeled: Iterable[RelationEdge]) -> List[Dict[str, WordOccurrence]]:
    """Every label-respecting bijection from the nodes of ``g`` onto those of ``h_labeled``.

    Results are ordered lexicographically by the mapped target occurrences,
    taken in the order of ``g``'s sorted node names.
    """
    h_edges = [(e.relation, e.head, e.dependent) for e in h_labeled]
    h_nodes = sorted({o for _, a, b in h_edges for o in (a, b)}, key=lambda o: o.sort_key)
    found = list(_bijections(list(g.nodes), list(g.edges), h_nodes, h_edges))
    found.sort(key=lambda m: tuple(m[n].sort_key for n in g.nodes))
    return found


@dataclass(frozen=True)
class Alignment:
    """Total function from target occurrences to the source occurrences that gave rise to them."""

    pairs: Tuple[Tuple[WordOccurrence, WordOccurrence], ...] = ()

    def __post_init__(self):
        pairs = tuple(sorted(self.pairs, key=lambda p: (p[0].sort_key, p[1].sort_key)))
        targets = [t for t, _ in pairs]
        if len(set(targets)) != len(targets):
            raise MalformedInput("an alignment maps each target occurrence exactly once")
        object.__setattr__(self, "pairs", pairs)

    @classmethod
    def from_mapping(cls, mapping: Mapping[WordOccurrence, WordOccurrence]) -> "Alignment":
        return cls(tuple(mapping.items()))

    @cached_property
    def mapping(self) -> Dict[WordOccurrence, WordOccurrence]:
        return dict(self.pairs)

    def __getitem__(self, target: WordOccurrence) -> WordOccurrence:
        return self.mapping[target]

    @property
    def targets(self) -> Tuple[WordOccurrence, ...]:
        return tuple(t for t, _ in self.pairs)

    def inverse(self, source: WordOccurrence) -> Tuple[WordOccurrence, ...]:
        return tuple(t for t, s in self.pairs if s == source)

    def inverse_words(self, source: WordOccurrence) -> Multiset:
        return Multiset.from_iterable(t.word for t in self.inverse(source))

    def check(self, target_nodes: Iterable[WordOccurrence], source_nodes: Iterable[WordOccurrence]):
        """Require totality on ``target_nodes`` and an image inside ``source_nodes``."""
        target_nodes = frozenset(target_nodes)
        source_nodes = frozenset(source_nodes)
        missing = target_nodes - set(self.mapping)
        if missing:
            raise MalformedInput(
                "alignment is not total; unaligned: "
                + ", ".join(str(o) for o in sorted(missing, key=lambda o: o.sort_key))
            )
        extra = set(self.mapping) - target_nodes
        if extra:
            raise MalformedInput(
                "alignment covers occurrences outside the target tree: "
                + ", ".join(str(o) for o in sorted(extra, key=lambda o: o.sort_key))
            )
        outside = [s for s in self.mapping.values() if s not in source_nodes]
        if outside:
            raise MalformedInput(f"alignment image {outside[0]} is not a source node")

    def __str__(self):
        return ",".join(f"{t}>{s}" for t, s in self.pairs) or "-"
