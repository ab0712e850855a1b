"""Tests for chain scoring, ranking and reverse rescoring."""

import dataclasses
import math

import pytest

from dependency_translator import decode, Decoder, rescore_reverse
from dependency_translator.decoder import Hypothesis, RecognitionHypothesis, rank
from dependency_translator.errors import EmptyInput, MalformedInput, MissingReverseModel
from dependency_translator.graph import Alignment, Multiset
from dependency_translator.models import MonolingualModel, TransferModel
from tests.factories import obj_obj_instance, svo_tree


def chain(target, total, source="john sees mary"):
    """A hand-made chain whose whole log score sits in the acoustic factor."""
    return Hypothesis(
        source_words=tuple(source.split()),
        source_tree=svo_tree(*source.split()),
        alignment=Alignment(),
        target_tree=svo_tree(*target.split()),
        target_words=tuple(target.split()),
        acoustic=total,
        source_generation=0.0,
        source_content=0.0,
        transfer=0.0,
        target_generation=0.0,
    )


@pytest.fixture
def point_mass_decoder(john_sees_mary, en_fr_point_mass, jean_voit_marie):
    return Decoder(john_sees_mary, en_fr_point_mass, jean_voit_marie)


def test_recognition_hypothesis_validation():
    with pytest.raises(EmptyInput):
        RecognitionHypothesis((), -1.0)
    with pytest.raises(MalformedInput):
        RecognitionHypothesis(("john",), float("nan"))
    with pytest.raises(MalformedInput):
        RecognitionHypothesis(("john",), float("-inf"))


def test_empty_nbest_list(point_mass_decoder):
    with pytest.raises(EmptyInput):
        point_mass_decoder.chains([])


def test_point_mass_chain_factors(point_mass_decoder):
    (h,) = point_mass_decoder.chains([RecognitionHypothesis(("john", "sees", "mary"), -1.0)])
    assert h.target_words == ("jean", "voit", "marie")
    assert h.factors == pytest.approx({"acoustic": -1.0, "source_generation": 0.0, "source_content": 0.0,
                                       "transfer": 0.0, "target_generation": 0.0})
    assert h.total == pytest.approx(-1.0)
    assert not h.reversed


def test_point_mass_decode(point_mass_decoder):
    (best,) = point_mass_decoder.decode([RecognitionHypothesis(("john", "sees", "mary"), -1.0)])
    assert best.target_words == ("jean", "voit", "marie")
    assert best.probability == pytest.approx(math.exp(-1.0))


def test_unparseable_hypothesis_contributes_nothing(point_mass_decoder):
    hyps = [RecognitionHypothesis(("sees", "john", "mary"), -0.1)]
    assert point_mass_decoder.chains(hyps) == []
    assert point_mass_decoder.decode(hyps) == []


def test_module_decode_matches_decoder(john_sees_mary, en_fr_point_mass, jean_voit_marie, point_mass_decoder):
    hyps = [RecognitionHypothesis(("john", "sees", "mary"), -3.0)]
    assert decode(hyps, john_sees_mary, en_fr_point_mass, jean_voit_marie) == point_mass_decoder.decode(hyps)


def test_translate_tree(point_mass_decoder):
    assert point_mass_decoder.translate_tree(svo_tree("john", "sees", "mary")) == [
        (("jean", "voit", "marie"), pytest.approx(1.0))]
    with pytest.raises(MalformedInput):
        point_mass_decoder.translate_tree(svo_tree("john", "sees", "mary"), 0)


def test_target_classes_are_cached(point_mass_decoder):
    tree = svo_tree("john", "sees", "mary")
    assert point_mass_decoder.target_classes(tree) is point_mass_decoder.target_classes(tree)


def test_sum_and_max_modes_disagree():
    chains = [chain("x x x", math.log(0.3)), chain("y y y", math.log(0.2)), chain("y y y", math.log(0.2), "mary sees john")]
    by_sum = rank(chains, "sum", 5)
    assert [r.hypothesis.target_string for r in by_sum] == ["y y y", "x x x"]
    assert by_sum[0].probability == pytest.approx(0.4)
    by_max = rank(chains, "max", 5)
    assert [r.hypothesis.target_string for r in by_max] == ["x x x", "y y y", "y y y"]
    assert by_max[0].probability == pytest.approx(0.3)


def test_rank_breaks_ties_by_target_string():
    chains = [chain("b b b", -1.0), chain("a a a", -1.0)]
    assert [r.hypothesis.target_string for r in rank(chains, "sum")] == ["a a a", "b b b"]
    assert [r.hypothesis.target_string for r in rank(chains, "max")] == ["a a a", "b b b"]


def test_rank_drops_zero_probability_chains_and_truncates():
    chains = [chain("a a a", -1.0), chain("b b b", float("-inf")), chain("c c c", -2.0)]
    assert [r.hypothesis.target_string for r in rank(chains, "sum", 1)] == ["a a a"]
    assert len(rank(chains, "max", 10)) == 2


def test_rank_rejects_bad_arguments():
    with pytest.raises(MalformedInput):
        rank([], "mean", 5)
    with pytest.raises(MalformedInput):
        rank([], "sum", 0)


def test_shifting_acoustic_scores_keeps_the_ranking(toy_models, data_dir):
    from dependency_translator import tools

    hyps = tools.read_nbest(data_dir / "toy" / "nbest.txt")
    shifted = [RecognitionHypothesis(h.words, h.acoustic_score - 7.5) for h in hyps]
    decoder = Decoder(*toy_models)
    for mode in ("sum", "max"):
        before = [r.target_words for r in decoder.decode(hyps, 10, mode)]
        after = [r.target_words for r in decoder.decode(shifted, 10, mode)]
        assert before == after


def test_rescore_reverse_by_hand(point_mass_decoder, jean_voit_marie, fr_en_point_mass):
    (h,) = point_mass_decoder.chains([RecognitionHypothesis(("john", "sees", "mary"), -1.0)])
    target_lm = dataclasses.replace(jean_voit_marie, top={"voit": 0.5, "jean": 0.25, "marie": 0.25})
    (r,) = rescore_reverse([h], target_lm, fr_en_point_mass)
    assert r.reversed
    assert set(r.factors) == {"acoustic", "source_generation", "target_content", "reverse_transfer",
                              "target_generation"}
    assert r.target_content == pytest.approx(math.log(0.5))
    assert r.reverse_transfer == pytest.approx(0.0)
    assert r.total == pytest.approx(-1.0 + math.log(0.5))


def test_rescore_reverse_zero_reverse_probability(point_mass_decoder, jean_voit_marie, en_fr_point_mass):
    (h,) = point_mass_decoder.chains([RecognitionHypothesis(("john", "sees", "mary"), -1.0)])
    (r,) = rescore_reverse([h], jean_voit_marie, en_fr_point_mass)
    assert r.reverse_transfer == float("-inf")
    assert rank([r]) == []


def test_rescore_reverse_needs_a_model(jean_voit_marie):
    with pytest.raises(MissingReverseModel):
        rescore_reverse([chain("a a a", -1.0)], jean_voit_marie, None)


def test_rescore_reverse_reorders_two_chains(john_sees_mary, en_fr_point_mass, fr_en_point_mass):
    lexical = dict(en_fr_point_mass.lexical)
    lexical[("sees", Multiset.from_iterable(["voit"]))] = 0.6
    lexical[("sees", Multiset.from_iterable(["regarde"]))] = 0.4
    forward = TransferModel(lexical=lexical, rules=en_fr_point_mass.rules)
    reverse_lexical = dict(fr_en_point_mass.lexical)
    reverse_lexical[("regarde", Multiset.from_iterable(["sees"]))] = 1.0
    reverse = TransferModel(lexical=reverse_lexical, rules=fr_en_point_mass.rules)
    french = MonolingualModel(
        top={"voit": 0.2, "regarde": 0.8},
        dependency={(verb, rel, word): 1.0 for verb in ("voit", "regarde")
                    for rel, word in (("subj", "jean"), ("obj", "marie"))},
        detail={(verb, rel, 1): 1.0 for verb in ("voit", "regarde") for rel in ("subj", "obj")},
        sequencing={("e",): 1.0, ("subj", "e", "obj"): 1.0},
    )

    chains = Decoder(john_sees_mary, forward, french).chains([RecognitionHypothesis(("john", "sees", "mary"), -1.0)])
    before = sorted(chains, key=Hypothesis.sort_key)
    assert [h.target_string for h in before] == ["jean voit marie", "jean regarde marie"]
    assert [math.exp(h.total) for h in before] == pytest.approx([0.6 * math.exp(-1), 0.4 * math.exp(-1)])

    # P(C_t) P(C_s|C_t): 0.8 * 1 for regarde against 0.2 * 1 for voit
    after = rescore_reverse(chains, french, reverse)
    assert [h.target_string for h in after] == ["jean regarde marie", "jean voit marie"]
    assert [math.exp(h.total) for h in after] == pytest.approx([0.8 * math.exp(-1), 0.2 * math.exp(-1)])
    assert [h.reverse_transfer for h in after] == pytest.approx([0.0, 0.0])


def test_rescore_reverse_keeps_point_mass_totals(point_mass_decoder, jean_voit_marie, fr_en_point_mass):
    chains = point_mass_decoder.chains([RecognitionHypothesis(("john", "sees", "mary"), -2.5)])
    rescored = rescore_reverse(chains, jean_voit_marie, fr_en_point_mass)
    assert [h.total for h in rescored] == pytest.approx([h.total for h in chains])
    assert [h.target_string for h in rescored] == [h.target_string for h in chains]


def test_translate_tree_mass_of_symmetric_dependents():
    source, tm = obj_obj_instance()
    french = MonolingualModel(
        top={"voit": 1.0},
        dependency={("voit", "obj", "marie"): 1.0},
        detail={("voit", "obj", 2): 1.0},
        sequencing={("e",): 1.0, ("e", "obj", "obj"): 1.0},
    )
    decoder = Decoder(french, tm, french)
    ((c_t, _, transfer),) = decoder.target_classes(source)
    assert math.exp(transfer) == pytest.approx(1.0)
    assert decoder.translate_tree(source, k=5) == [(("voit", "marie", "marie"), pytest.approx(1.0))]
