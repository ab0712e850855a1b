"""Brute-force reference implementations.

Nothing here calls the scoring code of the models or the decoder: every
probability is recomputed from the raw parameter tables by literal
enumeration, so agreement with the main code paths is meaningful. Sizes are
capped and exceeding a cap raises TooLarge.
"""

import itertools
import logging
import math
from collections import Counter, defaultdict
from typing import Dict, Iterator, List, Sequence, Tuple

from dependency_translator.config import config
from dependency_translator.errors import MalformedInput, TooLarge
from dependency_translator.graph import Multiset, RelationEdge, RelationTree, WordOccurrence

logger = logging.getLogger(__name__)

HEAD = "e"
ROOT = -1


def _cap(what: str, size: int, bound: int = None):
    bound = config.ORACLE_BOUND if bound is None else bound
    if size > bound:
        raise TooLarge(what, size, bound)


def _multinomial(items) -> int:
    counts = Counter(items)
    k = math.factorial(sum(counts.values()))
    for c in counts.values():
        k //= math.factorial(c)
    return k


# Raw table access

def _detail_relations(m, word: str) -> set:
    return {rel for head, rel, _ in m.detail if head == word}


def _detail(m, word: str, rel: str, n: int) -> float:
    if rel not in _detail_relations(m, word):
        return 1.0 if n == 0 else 0.0
    return m.detail.get((word, rel, n), 0.0)


# Trees as head arrays: heads[i] is the parent position of i, or ROOT

def _head_arrays(n: int) -> Iterator[Tuple[int, ...]]:
    """Every parent assignment over positions 0..n-1 forming a single rooted tree."""
    for heads in itertools.product(range(ROOT, n), repeat=n):
        if any(h == i for i, h in enumerate(heads)) or heads.count(ROOT) != 1:
            continue
        if all(_reaches_root(heads, i) for i in range(n)):
            yield heads


def _reaches_root(heads, i) -> bool:
    seen = set()
    while heads[i] != ROOT:
        if i in seen:
            return False
        seen.add(i)
        i = heads[i]
    return True


def _dominates(heads, a, b) -> bool:
    while b != ROOT:
        if b == a:
            return True
        b = heads[b]
    return False


def _projective(heads, order) -> bool:
    """Every arc's span in ``order`` holds only descendants of the arc's head."""
    position = {node: p for p, node in enumerate(order)}
    for d, h in enumerate(heads):
        if h == ROOT:
            continue
        lo, hi = sorted((position[h], position[d]))
        for p in range(lo + 1, hi):
            if not _dominates(heads, h, order[p]):
                return False
    return True


def _signature(words, heads, labels, i):
    children = [(labels[d], _signature(words, heads, labels, d)) for d, h in enumerate(heads) if h == i]
    return (words[i], tuple(sorted(children)))


def _content_prob(words, heads, labels, m) -> float:
    root = heads.index(ROOT)
    p = m.top.get(words[root], 0.0)
    for h in range(len(words)):
        kids = defaultdict(list)
        for d, parent in enumerate(heads):
            if parent == h:
                kids[labels[d]].append(d)
        for rel in _detail_relations(m, words[h]) | set(kids):
            p *= _detail(m, words[h], rel, len(kids[rel]))
            for d in kids[rel]:
                p *= m.dependency.get((words[h], rel, words[d]), 0.0)
            p *= _multinomial(_signature(words, heads, labels, d) for d in kids[rel])
        if p == 0.0:
            return 0.0
    return p


def _order_prob(words, heads, labels, order, m) -> float:
    """P(order|C) for an occurrence order given as a permutation of positions."""
    if not _projective(heads, order):
        return 0.0
    position = {node: p for p, node in enumerate(order)}
    p = 1.0
    for h in range(len(words)):
        slots = [(position[h], HEAD)] + [(position[d], labels[d]) for d, parent in enumerate(heads) if parent == h]
        p *= m.sequencing.get(tuple(label for _, label in sorted(slots)), 0.0)
        kids = defaultdict(list)
        for d, parent in enumerate(heads):
            if parent == h:
                kids[labels[d]].append(_signature(words, heads, labels, d))
        for forms in kids.values():
            p /= _multinomial(forms)
    return p


def _labelings(heads, alphabet) -> Iterator[Dict[int, str]]:
    arcs = [d for d, h in enumerate(heads) if h != ROOT]
    for choice in itertools.product(alphabet, repeat=len(arcs)):
        yield dict(zip(arcs, choice))


def _sentence_trees(words: Sequence[str], m) -> Iterator[Tuple[tuple, dict, float, float]]:
    """(heads, labels, P(C), P(W|C)) for every labeled tree over ``words`` in surface order."""
    alphabet = sorted({rel for _, rel, _ in m.dependency} | {rel for _, rel, _ in m.detail})
    order = tuple(range(len(words)))
    for heads in _head_arrays(len(words)):
        if not _projective(heads, order):
            continue
        for labels in _labelings(heads, alphabet):
            content = _content_prob(words, heads, labels, m)
            if content == 0.0:
                continue
            yield heads, labels, content, _order_prob(words, heads, labels, order, m)


def oracle_sentence_prob(words: Sequence[str], m) -> float:
    """P(W) by enumerating every head function and every edge labeling."""
    words = tuple(words)
    if not words:
        raise MalformedInput("cannot score an empty word string")
    _cap("word string", len(words))
    return math.fsum(content * ordering for _, _, content, ordering in _sentence_trees(words, m))


def _to_tree(words, heads, labels) -> RelationTree:
    nodes = [WordOccurrence(w, i + 1) for i, w in enumerate(words)]
    edges = [RelationEdge(labels[d], nodes[h], nodes[d]) for d, h in enumerate(heads) if h != ROOT]
    return RelationTree(nodes[heads.index(ROOT)], edges)


def truncated_mass(m, depth: int) -> float:
    """Probability that the ordered generative process yields at most ``depth`` levels.

    Each head draws a count per relation from its detail table, then an
    ordered tuple of dependents; every tuple is enumerated explicitly.
    """
    if depth < 1:
        return 0.0
    vocabulary = sorted({w for w in m.top} | {h for h, _, _ in m.dependency} | {w for _, _, w in m.dependency})

    def finishes(word, levels):
        p = 1.0
        for rel in sorted(_detail_relations(m, word)):
            options = [(x, m.dependency.get((word, rel, x), 0.0)) for x in vocabulary]
            total = 0.0
            for (_, _, n), q in ((key, q) for key, q in m.detail.items() if key[:2] == (word, rel)):
                if n == 0:
                    total += q
                    continue
                if levels == 1:
                    continue
                for tuple_ in itertools.product(options, repeat=n):
                    branch = q
                    for x, px in tuple_:
                        branch *= px * finishes(x, levels - 1) if px else 0.0
                    total += branch
            p *= total
        return p

    return math.fsum(p * finishes(w, depth) for w, p in sorted(m.top.items()) if p)


# Transfer

def _rule_root(rule) -> str:
    heads = {a for _, a, _ in rule.source_shape.edges}
    return next(iter(heads))


def _source_matches(rule, local: List[tuple]) -> Iterator[Dict[str, WordOccurrence]]:
    """Label-respecting maps from the rule's source shape onto one source local tree."""
    root = _rule_root(rule)
    shape = sorted((rel, b) for rel, _, b in rule.source_shape.edges)
    if len(shape) != len(local):
        return
    head = local[0][1]
    for perm in itertools.permutations(local):
        if all(rel == edge[0] for (rel, _), edge in zip(shape, perm)):
            yield {root: head, **{b: edge[2] for (_, b), edge in zip(shape, perm)}}


def _step_options(rule, local, f, target_nodes, target_edges) -> set:
    options = set()
    shape_nodes = sorted({n for _, a, b in rule.target_shape.edges for n in (a, b)})
    image = dict(rule.node_alignment)
    for match in _source_matches(rule, local):
        for chosen in itertools.permutations(target_nodes, len(shape_nodes)):
            phi = dict(zip(shape_nodes, chosen))
            if any(f[phi[u]] != match[image[u]] for u in shape_nodes):
                continue
            produced = frozenset((rel, phi[a], phi[b]) for rel, a, b in rule.target_shape.edges)
            if produced <= target_edges:
                options.add((rule.rule_id, rule.probability, produced))
    return options


def _target_automorphisms(targets, target_edges) -> List[Dict[WordOccurrence, WordOccurrence]]:
    found = []
    for perm in itertools.permutations(targets):
        sigma = dict(zip(targets, perm))
        if any(v.word != sigma[v].word for v in targets):
            continue
        if {(rel, sigma[a], sigma[b]) for rel, a, b in target_edges} == target_edges:
            found.append(sigma)
    return found


def oracle_translation_prob(c_t: RelationTree, c_s: RelationTree, tm) -> float:
    """P(C_t|C_s) by enumerating every alignment, rule choice and witness.

    Each alignment is weighted by the share of target automorphisms that fix
    it, so every orbit of alignments contributes once.
    """
    _cap("target tree", len(c_t.nodes))
    _cap("source tree", len(c_s.nodes))
    targets = sorted(c_t.nodes, key=lambda o: (o.index, o.word))
    sources = sorted(c_s.nodes, key=lambda o: (o.index, o.word))
    target_edges = frozenset((e.relation, e.head, e.dependent) for e in c_t.edges)
    automorphisms = _target_automorphisms(targets, target_edges)
    locals_ = defaultdict(list)
    for e in c_s.edges:
        locals_[e.head].append((e.relation, e.head, e.dependent))

    total = 0.0
    for image in itertools.product(sources, repeat=len(targets)):
        f = dict(zip(targets, image))
        lexical = 1.0
        for w in sources:
            produced_words = Multiset.from_iterable(v.word for v in targets if f[v] == w)
            lexical *= tm.lexical.get((w.word, produced_words), 0.0)
        if lexical == 0.0:
            continue
        per_local = []
        for head in sorted(locals_, key=lambda o: (o.index, o.word)):
            local = sorted(locals_[head], key=lambda e: (e[0], e[2].index, e[2].word))
            labels = Counter(rel for rel, _, _ in local)
            options = set()
            for rule in tm.rules:
                if Counter(rel for rel, _, _ in rule.source_shape.edges) == labels:
                    options |= _step_options(rule, local, f, targets, target_edges)
            per_local.append(sorted(options, key=lambda o: (o[0], sorted(map(repr, o[2])))))
        structural = 0.0
        for combo in itertools.product(*per_local):
            union = set()
            disjoint = True
            for _, _, produced in combo:
                if union & produced:
                    disjoint = False
                union |= produced
            if disjoint and union == target_edges:
                branch = 1.0
                for _, p, _ in combo:
                    branch *= p
                structural += branch
        if structural == 0.0:
            continue
        fixed = sum(1 for sigma in automorphisms if all(f[sigma[v]] == f[v] for v in targets))
        total += lexical * structural * fixed / len(automorphisms)
    return total


# Chains

def _target_labels(tm) -> List[str]:
    return sorted({rel for rule in tm.rules for rel, _, _ in rule.target_shape.edges})


def _automorphisms(words, heads, labels) -> int:
    edges = {(labels[d], h, d) for d, h in enumerate(heads) if h != ROOT}
    count = 0
    for perm in itertools.permutations(range(len(words))):
        if any(words[perm[i]] != words[i] for i in range(len(words))):
            continue
        if {(rel, perm[h], perm[d]) for rel, h, d in edges} == edges:
            count += 1
    return count


def _string_probs(words, heads, labels, m) -> Dict[Tuple[str, ...], float]:
    by_string = defaultdict(float)
    for order in itertools.permutations(range(len(words))):
        p = _order_prob(words, heads, labels, order, m)
        if p:
            by_string[tuple(words[i] for i in order)] += p
    aut = _automorphisms(words, heads, labels)
    return {u: p / aut for u, p in by_string.items()}


def oracle_chains(hyps, src, tm, tgt) -> List[Tuple[Tuple[str, ...], Tuple[str, ...], float]]:
    """(target words, source words, chain probability) for every nonzero chain.

    Chains range over hypotheses, positioned source trees, target trees up
    to re-indexing, and target strings; the acoustic factor is exp(score).
    """
    labels_t = _target_labels(tm)
    chains = []
    visited = 0
    for hyp in hyps:
        words = tuple(hyp.words)
        _cap("word string", len(words))
        acoustic = math.exp(hyp.acoustic_score)
        for heads, labels, content, ordering in _sentence_trees(words, src):
            if ordering == 0.0:
                continue
            c_s = _to_tree(words, heads, labels)
            options = [[ms for (w, ms), p in sorted(tm.lexical.items(), key=lambda i: (i[0][0], i[0][1].counts))
                        if w == word and p > 0] for word in words]
            seen = set()
            for choice in itertools.product(*options):
                target_words = [x for ms in choice for x in ms.elements()]
                if not target_words:
                    continue
                _cap("target word multiset", len(target_words))
                for t_heads in _head_arrays(len(target_words)):
                    for t_labels in _labelings(t_heads, labels_t):
                        visited += 1
                        if visited > config.ORACLE_CHAIN_LIMIT:
                            raise TooLarge("chain enumeration", visited, config.ORACLE_CHAIN_LIMIT)
                        root = t_heads.index(ROOT)
                        signature = _signature(target_words, t_heads, t_labels, root)
                        if signature in seen:
                            continue
                        seen.add(signature)
                        c_t = _to_tree(target_words, t_heads, t_labels)
                        transfer = oracle_translation_prob(c_t, c_s, tm)
                        if transfer == 0.0:
                            continue
                        for u, generation in _string_probs(target_words, t_heads, t_labels, tgt).items():
                            p = acoustic * ordering * content * transfer * generation
                            if p > 0.0:
                                chains.append((u, words, p))
    logger.debug("oracle visited %d candidate target trees, kept %d chains", visited, len(chains))
    chains.sort(key=lambda c: (-c[2], c[0], c[1]))
    return chains


def oracle_decode(hyps, src, tm, tgt) -> Dict[Tuple[str, ...], float]:
    """Σ over chains of the chain probability, per target string."""
    marginals = defaultdict(list)
    for u, _, p in oracle_chains(hyps, src, tm, tgt):
        marginals[u].append(p)
    return {u: math.fsum(ps) for u, ps in sorted(marginals.items())}
