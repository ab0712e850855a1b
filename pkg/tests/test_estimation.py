"""Tests for relative-frequency estimation of monolingual and transfer models."""

import pytest

from dependency_translator import Decoder, tools
from dependency_translator.errors import EmptyCorpus, MalformedInput, NonProjectiveRecord, UndecomposableRecord
from dependency_translator.graph import Alignment, Multiset, RelationEdge, RelationTree, WordOccurrence
from dependency_translator.models.estimation import (
    BitextRecord,
    MonolingualCounts,
    TransferCounts,
    TreebankRecord,
    canonical_rule,
    estimate_monolingual,
    estimate_transfer,
)
from dependency_translator.models.transfer import score_translation, translate
from tests.factories import occurrences, svo_tree


def record(subject, verb, obj):
    tree = svo_tree(subject, verb, obj)
    return TreebankRecord(occurrences(subject, verb, obj), tree)


def aligned(source, target):
    f = Alignment(tuple(zip(target.tree.sorted_nodes, source.tree.sorted_nodes)))
    return BitextRecord(source, target, f)


def test_single_record_gives_point_mass_model(data_dir):
    model = estimate_monolingual([record("john", "sees", "mary")])
    assert tools.format_model(model) == (data_dir / "models" / "john_sees_mary.lm").read_text(encoding="utf-8")


def test_relative_frequencies_on_toy_corpus(toy_bitext):
    model = estimate_monolingual([r.source for r in toy_bitext])
    assert model.top_prob("sees") == pytest.approx(0.5)
    assert model.top_prob("sleeps") == pytest.approx(0.3)
    assert model.top_prob("likes") == pytest.approx(0.2)
    assert model.top_prob("cat") == 0.0
    assert model.sequence_prob(("det", "e")) == pytest.approx(1.0)
    assert model.check_normalization()


def test_smoothing_spreads_mass_over_the_vocabulary():
    model = estimate_monolingual([record("john", "sees", "mary")], lam=1.0)
    assert model.top_prob("sees") == pytest.approx(2 / 4)
    assert model.top_prob("john") == pytest.approx(1 / 4)
    assert model.dependency_prob("sees", "subj", "mary") == pytest.approx(1 / 4)
    assert model.detail_prob("sees", "subj", 0) == pytest.approx(1 / 3)
    assert model.sequence_prob(("obj", "e", "subj")) == pytest.approx(1 / 7)
    assert model.check_normalization()


def test_explicit_n_max_widens_detail_support():
    model = estimate_monolingual([record("john", "sees", "mary")], lam=1.0, n_max=2)
    assert model.detail_prob("sees", "obj", 2) == pytest.approx(1 / 4)
    with pytest.raises(MalformedInput):
        estimate_monolingual([record("john", "sees", "mary")], n_max=0)


def test_merged_counts_equal_single_pass(toy_bitext):
    corpus = [r.source for r in toy_bitext]
    merged = MonolingualCounts.from_records(corpus[:4]) + MonolingualCounts.from_records(corpus[4:], first=5)
    assert merged == MonolingualCounts.from_records(corpus)
    assert tools.format_model(merged.estimate()) == tools.format_model(estimate_monolingual(corpus))


def test_empty_corpus():
    with pytest.raises(EmptyCorpus):
        estimate_monolingual([])
    with pytest.raises(EmptyCorpus):
        estimate_transfer([])


def test_negative_lambda():
    with pytest.raises(MalformedInput):
        estimate_monolingual([record("john", "sees", "mary")], lam=-0.5)


def test_non_projective_record_is_named():
    a, b, c = occurrences("a", "b", "c")
    chain = RelationTree(a, [RelationEdge("r", a, b), RelationEdge("s", b, c)])
    corpus = [record("john", "sees", "mary"), TreebankRecord((b, a, c), chain)]
    with pytest.raises(NonProjectiveRecord) as info:
        estimate_monolingual(corpus)
    assert info.value.record == 2


def test_single_pair_gives_point_mass_transfer_model(data_dir):
    pair = aligned(record("john", "sees", "mary"), record("jean", "voit", "marie"))
    model = estimate_transfer([pair])
    assert tools.format_model(model) == (data_dir / "models" / "en_fr_point_mass.tm").read_text(encoding="utf-8")


def test_toy_transfer_model(toy_bitext):
    model = estimate_transfer(toy_bitext)
    assert model.lexical_prob("likes", Multiset.from_iterable(["aime"])) == pytest.approx(0.5)
    assert model.lexical_prob("likes", Multiset.from_iterable(["adore"])) == pytest.approx(0.5)
    assert model.lexical_prob("the", Multiset.from_iterable(["le"])) == pytest.approx(1.0)
    assert [r.rule_id for r in model.rules] == [f"r{i:03d}" for i in range(1, len(model.rules) + 1)]
    assert model.check_normalization()


def test_transfer_counts_merge(toy_bitext):
    merged = TransferCounts.from_records(toy_bitext[:3]) + TransferCounts.from_records(toy_bitext[3:], first=4)
    assert merged == TransferCounts.from_records(toy_bitext)


def test_dropped_word_counts_the_empty_multiset():
    the, cat = occurrences("the", "cat")
    source = TreebankRecord((the, cat), RelationTree(cat, [RelationEdge("det", cat, the)]))
    (chat,) = occurrences("chat")
    target = TreebankRecord((chat,), RelationTree(chat))
    model = estimate_transfer([BitextRecord(source, target, Alignment(((chat, cat),)))])
    assert model.lexical_prob("the", Multiset()) == pytest.approx(1.0)
    (rule,) = model.rules
    assert str(rule.target_shape) == "-"
    assert rule.alignment_text == "-"


def test_undecomposable_target_edge():
    a, b, c = occurrences("a", "b", "c")
    source = TreebankRecord((a, b, c), RelationTree(a, [RelationEdge("r", a, b), RelationEdge("s", b, c)]))
    x, y, z = occurrences("x", "y", "z")
    target = TreebankRecord((x, y, z), RelationTree(x, [RelationEdge("r", x, y), RelationEdge("s", x, z)]))
    f = Alignment(((x, a), (y, b), (z, c)))
    with pytest.raises(UndecomposableRecord) as info:
        estimate_transfer([BitextRecord(source, target, f)])
    assert info.value.record == 1
    assert info.value.edge == RelationEdge("s", x, z)


def test_edge_between_aligned_siblings_belongs_to_their_head():
    source = record("john", "sees", "mary")
    jean, voit, marie = occurrences("jean", "voit", "marie")
    target = TreebankRecord((jean, voit, marie),
                            RelationTree(jean, [RelationEdge("p", jean, voit), RelationEdge("q", jean, marie)]))
    model = estimate_transfer([aligned(source, target)])
    (rule,) = model.rules
    assert str(rule.source_shape) == "obj(h,d1);subj(h,d2)"
    assert str(rule.target_shape) == "p(t2,t3);q(t2,t1)"
    assert rule.probability == 1.0
    assert score_translation(target.tree, source.tree, model) == pytest.approx(1.0)
    ((tree, _, p),) = translate(source.tree, model, 5)
    assert tree.canonical_form() == target.tree.canonical_form()
    assert p == pytest.approx(1.0)


def test_bitext_record_requires_total_alignment():
    source, target = record("john", "sees", "mary"), record("jean", "voit", "marie")
    partial = Alignment(tuple(zip(target.tree.sorted_nodes[:2], source.tree.sorted_nodes[:2])))
    with pytest.raises(MalformedInput):
        BitextRecord(source, target, partial)


def test_canonical_rule_names_nodes_by_label_order():
    sees, john, mary = WordOccurrence("sees", 2), WordOccurrence("john", 1), WordOccurrence("mary", 3)
    voit, jean, marie = WordOccurrence("voit", 2), WordOccurrence("jean", 1), WordOccurrence("marie", 3)
    s_i = [RelationEdge("subj", sees, john), RelationEdge("obj", sees, mary)]
    t_i = [RelationEdge("subj", voit, jean), RelationEdge("obj", voit, marie)]
    f = Alignment(((jean, john), (voit, sees), (marie, mary)))
    src, tgt, align = canonical_rule(s_i, t_i, f)
    assert str(src) == "obj(h,d1);subj(h,d2)"
    assert str(tgt) == "obj(t3,t1);subj(t3,t2)"
    assert align == (("t1", "d1"), ("t2", "d2"), ("t3", "h"))


def test_record_order_does_not_change_the_models(toy_bitext):
    shuffled = list(reversed(toy_bitext[5:])) + list(toy_bitext[:5])
    for estimate in (lambda corpus: estimate_monolingual([r.source for r in corpus]),
                     lambda corpus: estimate_monolingual([r.target for r in corpus], lam=0.5),
                     estimate_transfer,
                     lambda corpus: estimate_transfer(corpus, lam=0.5)):
        assert tools.format_model(estimate(shuffled)) == tools.format_model(estimate(toy_bitext))


def test_training_pairs_translate_back_at_their_empirical_frequency(toy_models, toy_bitext):
    src, tm, tgt = toy_models
    decoder = Decoder(src, tm, tgt)
    ranked_first = 0
    for pair in toy_bitext:
        # every event is deterministic in the toy data except likes -> aime | adore
        expected = 0.5 if "likes" in pair.source.words else 1.0
        assert score_translation(pair.target.tree, pair.source.tree, tm) == pytest.approx(expected, abs=1e-9)
        ranked = dict(decoder.translate_tree(pair.source.tree, k=10))
        assert ranked[pair.target.words] == pytest.approx(expected, abs=1e-9)
        if ranked[pair.target.words] == pytest.approx(max(ranked.values())):
            ranked_first += 1
    assert ranked_first >= 8
