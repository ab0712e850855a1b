"""Decoder - combines recognition, analysis, transfer and generation scores to rank target strings."""

import dataclasses
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from dependency_translator import logprob
from dependency_translator.config import config
from dependency_translator.errors import EmptyInput, MalformedInput, MissingReverseModel
from dependency_translator.graph import Alignment, RelationTree
from dependency_translator.models.monolingual import (
    MonolingualModel,
    Words,
    analyses,
    log_linearizations,
    log_score_content,
)
from dependency_translator.models.transfer import TransferModel, log_score_translation, log_translations

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RecognitionHypothesis:
    """One n-best entry: a word string with a log score proportional to P(A_s|W_s)."""

    words: Words
    acoustic_score: float

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(self.words))
        if not self.words:
            raise EmptyInput("a recognition hypothesis needs at least one word")
        if not math.isfinite(self.acoustic_score):
            raise MalformedInput(f"acoustic score must be finite, got {self.acoustic_score}")


@dataclass(frozen=True)
class Hypothesis:
    """
    A full (W_s, C_s, C_t, W_t) chain with its factor log-scores.

    After reverse rescoring ``target_content`` and ``reverse_transfer`` are
    set and replace ``source_content`` and ``transfer`` in the total.
    """

    source_words: Words
    source_tree: RelationTree
    alignment: Alignment
    target_tree: RelationTree
    target_words: Words
    acoustic: float
    source_generation: float
    source_content: float
    transfer: float
    target_generation: float
    target_content: Optional[float] = None
    reverse_transfer: Optional[float] = None

    @property
    def reversed(self) -> bool:
        return self.reverse_transfer is not None

    @property
    def factors(self) -> Dict[str, float]:
        if self.reversed:
            middle = {"target_content": self.target_content, "reverse_transfer": self.reverse_transfer}
        else:
            middle = {"source_content": self.source_content, "transfer": self.transfer}
        return {
            "acoustic": self.acoustic,
            "source_generation": self.source_generation,
            **middle,
            "target_generation": self.target_generation,
        }

    @property
    def total(self) -> float:
        return sum(self.factors.values())

    @property
    def target_string(self) -> str:
        return " ".join(self.target_words)

    def sort_key(self):
        return (-self.total, self.target_string, " ".join(self.source_words),
                self.source_tree.serialize(), self.target_tree.serialize())


@dataclass(frozen=True)
class RankedTarget:
    """A ranked result: the sum-mode marginal or max-mode chain score, with its best chain."""

    hypothesis: Hypothesis
    score: float

    @property
    def target_words(self) -> Words:
        return self.hypothesis.target_words

    @property
    def probability(self) -> float:
        return logprob.exp(self.score)


def rank(chains: Iterable[Hypothesis], mode: str = None, k: int = None) -> List[RankedTarget]:
    """
    Rank chains by target string.

    Args:
        chains: Scored chains; zero-probability chains are dropped
        mode: "sum" ranks strings by their marginal over chains, "max" ranks single chains
        k: Number of results to keep

    Returns:
        At most ``k`` RankedTarget, best first, ties broken by target string
    """
    mode = mode or config.DEFAULT_MODE
    k = config.DEFAULT_K if k is None else k
    if mode not in config.MODES:
        raise MalformedInput(f"unknown ranking mode {mode!r}; expected one of {config.MODES}")
    if k < 1:
        raise MalformedInput(f"k must be positive, got {k}")
    live = sorted((h for h in chains if h.total != logprob.NEG_INF), key=Hypothesis.sort_key)

    if mode == "max":
        return [RankedTarget(h, h.total) for h in live[:k]]

    groups = defaultdict(list)
    for h in live:
        groups[h.target_words].append(h)
    ranked = [RankedTarget(members[0], logprob.log_sum(m.total for m in members))
              for members in groups.values()]
    ranked.sort(key=lambda r: (-r.score, r.hypothesis.target_string))
    return ranked[:k]


class Decoder:
    """
    Integrated speech-translation decoder.

    For every recognition hypothesis the decoder:
    1. Analyses W_s into every source tree C_s with P(C_s) and P(W_s|C_s)
    2. Transfers C_s into target trees C_t, identified up to re-indexing
    3. Generates every target string W_t of C_t with P(W_t|C_t)
    and ranks the resulting chains.
    """

    def __init__(self, source_model: MonolingualModel, transfer_model: TransferModel,
                 target_model: MonolingualModel):
        self.source_model = source_model
        self.transfer_model = transfer_model
        self.target_model = target_model
        self._transfer_cache: Dict[RelationTree, List[Tuple[RelationTree, Alignment, float]]] = {}
        self._generation_cache: Dict[tuple, Dict[Words, float]] = {}

    def target_classes(self, c_s: RelationTree) -> List[Tuple[RelationTree, Alignment, float]]:
        """
        Target trees reachable from ``c_s``, one representative per re-indexing class.

        Returns:
            (representative tree, its best alignment, log P(C_t|C_s)) triples
        """
        if c_s not in self._transfer_cache:
            representatives = {}
            for tree, f, _ in log_translations(c_s, self.transfer_model):
                representatives.setdefault(tree.canonical_form(), (tree, f))
            classes = []
            for tree, f in representatives.values():
                transfer = log_score_translation(tree, c_s, self.transfer_model)
                if transfer != logprob.NEG_INF:
                    classes.append((tree, f, transfer))
            logger.debug("%d target tree classes for %s", len(classes), c_s.serialize())
            self._transfer_cache[c_s] = classes
        return self._transfer_cache[c_s]

    def generations(self, c_t: RelationTree) -> Dict[Words, float]:
        key = c_t.canonical_form()
        if key not in self._generation_cache:
            self._generation_cache[key] = log_linearizations(c_t, self.target_model)
        return self._generation_cache[key]

    def chains(self, hyps: Sequence[RecognitionHypothesis]) -> List[Hypothesis]:
        """Every nonzero (W_s, C_s, C_t, W_t) chain for the n-best list."""
        if not hyps:
            raise EmptyInput("the n-best list is empty")
        found = []
        for number, hyp in enumerate(hyps, 1):
            logger.info("analysing hypothesis %d: %s", number, " ".join(hyp.words))
            source_analyses = analyses(hyp.words, self.source_model)
            for c_s, content, ordering in source_analyses:
                logger.info("transferring %s", c_s.serialize())
                for c_t, f, transfer in self.target_classes(c_s):
                    for words, generation in self.generations(c_t).items():
                        if generation == logprob.NEG_INF:
                            continue
                        found.append(Hypothesis(
                            source_words=hyp.words,
                            source_tree=c_s,
                            alignment=f,
                            target_tree=c_t,
                            target_words=words,
                            acoustic=hyp.acoustic_score,
                            source_generation=ordering,
                            source_content=content,
                            transfer=transfer,
                            target_generation=generation,
                        ))
        logger.info("generated %d chains from %d hypotheses", len(found), len(hyps))
        return found

    def decode(self, hyps: Sequence[RecognitionHypothesis], k: int = None, mode: str = None) -> List[RankedTarget]:
        return rank(self.chains(hyps), mode, k)

    def translate_tree(self, c_s: RelationTree, k: int = None) -> List[Tuple[Words, float]]:
        """
        Rank target strings for a fixed source tree.

        Args:
            c_s: Source relation tree
            k: Number of strings to keep

        Returns:
            (target words, Σ_{C_t} P(C_t|C_s) P(W_t|C_t)) pairs, most probable first
        """
        k = config.DEFAULT_K if k is None else k
        if k < 1:
            raise MalformedInput(f"k must be positive, got {k}")
        scores = defaultdict(list)
        for c_t, _, transfer in self.target_classes(c_s):
            for words, generation in self.generations(c_t).items():
                scores[words].append(transfer + generation)
        ranked = [(words, logprob.log_sum(values)) for words, values in scores.items()]
        ranked = [item for item in ranked if item[1] != logprob.NEG_INF]
        ranked.sort(key=lambda item: (-item[1], " ".join(item[0])))
        return [(words, logprob.exp(lp)) for words, lp in ranked[:k]]


def decode(hyps: Sequence[RecognitionHypothesis], src: MonolingualModel, tm: TransferModel,
           tgt: MonolingualModel, k: int = None, mode: str = None) -> List[RankedTarget]:
    """Rank target strings for an n-best list; see Decoder."""
    return Decoder(src, tm, tgt).decode(hyps, k, mode)


def rescore_reverse(results: Iterable[Hypothesis], tgt: MonolingualModel,
                    tm_reverse: Optional[TransferModel]) -> List[Hypothesis]:
    """
    Replace P(C_s) P(C_t|C_s) by P(C_t) P(C_s|C_t) in every chain and re-rank.

    Args:
        results: Chains to rescore
        tgt: Model supplying the target content probability P(C_t)
        tm_reverse: Target-to-source transfer model

    Returns:
        The rescored chains, best total first
    """
    if tm_reverse is None:
        raise MissingReverseModel("reverse rescoring needs a target-to-source transfer model")
    rescored = []
    for h in results:
        content = log_score_content(h.target_tree, tgt)
        reverse = (log_score_translation(h.source_tree, h.target_tree, tm_reverse)
                   if content != logprob.NEG_INF else logprob.NEG_INF)
        rescored.append(dataclasses.replace(h, target_content=content, reverse_transfer=reverse))
    rescored.sort(key=Hypothesis.sort_key)
    logger.info("rescored %d chains with reverse factors", len(rescored))
    return rescored
