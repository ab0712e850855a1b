"""File formats for corpora, bitexts, n-best lists and model files.

All files are UTF-8, tab separated, one item per line. Probabilities are
written with 12 significant digits and model lines are kept in canonical
order, so saving a loaded canonical file reproduces it byte for byte.
"""

import logging
import math
import re
from pathlib import Path
from typing import Iterator, List, Optional, Sequence, Tuple, Union

from dependency_translator.config import config
from dependency_translator.decoder import RecognitionHypothesis
from dependency_translator.errors import FormatError, MalformedInput, NonProjective, NonProjectiveRecord
from dependency_translator.graph import (
    HEAD_MARKER,
    Alignment,
    Multiset,
    RelationEdge,
    RelationTree,
    UnlabeledGraph,
    WordOccurrence,
    validate_tree,
)
from dependency_translator.models.estimation import BitextRecord, TreebankRecord
from dependency_translator.models.monolingual import MonolingualModel, induced_sequences
from dependency_translator.models.transfer import StructuralRule, TransferModel

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
Line = Tuple[int, str]

SOURCE_END = "---"
TARGET_END = "==="
MODEL_TYPES = ("TOP", "DEP", "DET", "SEQ", "LEX", "RULE")
_EDGE = re.compile(r"^([^\s(),;]+)\(([^\s(),;]+),([^\s(),;]+)\)$")


def format_probability(p: float) -> str:
    return f"{p:.{config.PROBABILITY_DIGITS}g}"


def _read_lines(path: PathLike) -> List[Line]:
    with open(path, "r", encoding="utf-8") as f:
        return [(number, line.rstrip("\n").rstrip("\r")) for number, line in enumerate(f, 1)]


def _blocks(lines: Sequence[Line]) -> Iterator[List[Line]]:
    """Group lines into blank-line separated records, skipping ``#`` comments."""
    block = []
    for number, text in lines:
        if text.startswith("#"):
            continue
        if not text.strip():
            if block:
                yield block
                block = []
            continue
        block.append((number, text))
    if block:
        yield block


# Corpora

def parse_record(lines: Sequence[Line], path: PathLike = "<input>", record: int = 1) -> TreebankRecord:
    """
    Build one treebank record from ``index<TAB>word<TAB>head<TAB>relation`` lines.

    Args:
        lines: (line number, text) pairs of the record
        path: File name used in error messages
        record: Record number used in error messages

    Returns:
        A validated, projective TreebankRecord
    """
    rows = []
    for position, (number, text) in enumerate(lines, 1):
        fields = text.split("\t")
        if len(fields) != 4:
            raise FormatError(path, number, f"expected 4 tab-separated fields, got {len(fields)}")
        index, word, head, relation = fields
        try:
            index, head = int(index), int(head)
        except ValueError:
            raise FormatError(path, number, "index and head must be integers") from None
        if index != position:
            raise FormatError(path, number, f"index {index} does not match line position {position}")
        if (head == 0) != (relation == HEAD_MARKER):
            raise FormatError(path, number, f"head 0 must go with relation {HEAD_MARKER!r} and only with it")
        if not 0 <= head <= len(lines):
            raise FormatError(path, number, f"head {head} is outside the record")
        rows.append((number, word, head, relation))

    first = lines[0][0]
    try:
        occurrences = [WordOccurrence(word, i) for i, (_, word, _, _) in enumerate(rows, 1)]
        edges = [RelationEdge(relation, occurrences[head - 1], occurrences[i])
                 for i, (_, _, head, relation) in enumerate(rows) if head]
        tree = validate_tree(occurrences, edges)
        induced_sequences(occurrences, tree)
    except NonProjective as exc:
        raise NonProjectiveRecord(record, exc, f"{path}:{first}") from exc
    except MalformedInput as exc:
        raise FormatError(path, first, f"record {record}: {exc}") from exc
    return TreebankRecord(tuple(occurrences), tree)


def read_corpus(path: PathLike) -> List[TreebankRecord]:
    """
    Read a CorpusFile.

    Args:
        path: Path to the corpus

    Returns:
        List of TreebankRecord in file order
    """
    records = [parse_record(block, path, n) for n, block in enumerate(_blocks(_read_lines(path)), 1)]
    logger.info("read %d records from %s", len(records), path)
    return records


def format_record(record: TreebankRecord, comment: Optional[str] = None) -> str:
    """Render a record in CorpusFile syntax, optionally preceded by a ``#`` comment."""
    position = {o: i for i, o in enumerate(record.occurrences, 1)}
    lines = [f"# {comment}"] if comment is not None else []
    for o in record.occurrences:
        edge = record.tree.head_edge(o)
        head, relation = (position[edge.head], edge.relation) if edge else (0, HEAD_MARKER)
        lines.append(f"{position[o]}\t{o.word}\t{head}\t{relation}")
    return "\n".join(lines) + "\n"


def write_corpus(records: Sequence[TreebankRecord], path: PathLike):
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(format_record(r) for r in records))


# Bitexts

def read_bitext(path: PathLike) -> List[BitextRecord]:
    """
    Read a BitextFile: source block, ``---``, target block, ``===``, alignment lines.

    Args:
        path: Path to the bitext

    Returns:
        List of BitextRecord in file order
    """
    records = []
    for n, block in enumerate(_blocks(_read_lines(path)), 1):
        texts = [text for _, text in block]
        if texts.count(SOURCE_END) != 1 or texts.count(TARGET_END) != 1:
            raise FormatError(path, block[0][0], f"record {n} needs exactly one {SOURCE_END!r} and one {TARGET_END!r}")
        split, end = texts.index(SOURCE_END), texts.index(TARGET_END)
        if not 0 < split < end - 1:
            raise FormatError(path, block[0][0], f"record {n} needs a nonempty source and target block")
        source = parse_record(block[:split], path, n)
        target = parse_record(block[split + 1:end], path, n)

        pairs = []
        for number, text in block[end + 1:]:
            fields = text.split("\t")
            try:
                t, s = (int(x) for x in fields)
                if t < 1 or s < 1:
                    raise IndexError
                pairs.append((target.occurrences[t - 1], source.occurrences[s - 1]))
            except (ValueError, IndexError):
                raise FormatError(path, number, "alignment lines are target_index<TAB>source_index within range") from None
        try:
            records.append(BitextRecord(source, target, Alignment(tuple(pairs))))
        except MalformedInput as exc:
            raise FormatError(path, block[0][0], f"record {n}: {exc}") from exc
    logger.info("read %d bitext records from %s", len(records), path)
    return records


def format_bitext_record(record: BitextRecord) -> str:
    source_index = {o: i for i, o in enumerate(record.source.occurrences, 1)}
    target_index = {o: i for i, o in enumerate(record.target.occurrences, 1)}
    alignment = [f"{target_index[t]}\t{source_index[s]}" for t, s in record.alignment.pairs]
    alignment.sort(key=lambda line: int(line.split("\t")[0]))
    return (format_record(record.source) + SOURCE_END + "\n" + format_record(record.target)
            + TARGET_END + "\n" + "".join(line + "\n" for line in alignment))


# N-best lists

def read_nbest(path: PathLike) -> List[RecognitionHypothesis]:
    """
    Read an NBestFile of ``log_acoustic_score<TAB>w1 w2 ... wn`` lines.

    Args:
        path: Path to the n-best list

    Returns:
        List of RecognitionHypothesis in file order
    """
    hyps = []
    for number, text in _read_lines(path):
        if not text.strip() or text.startswith("#"):
            continue
        score, _, words = text.partition("\t")
        try:
            value = float(score)
        except ValueError:
            raise FormatError(path, number, f"acoustic score {score!r} is not a number") from None
        if not math.isfinite(value):
            raise FormatError(path, number, "acoustic score must be finite")
        if not words.split():
            raise FormatError(path, number, "hypothesis has no words")
        hyps.append(RecognitionHypothesis(tuple(words.split()), value))
    return hyps


# Model files

def _multiset_text(m: Multiset) -> str:
    return str(m)


def _parse_multiset(text: str) -> Multiset:
    return Multiset() if text == "-" else Multiset.from_iterable(text.split(","))


def _parse_edges(text: str) -> UnlabeledGraph:
    if text == "-":
        return UnlabeledGraph()
    edges = []
    for item in text.split(";"):
        match = _EDGE.match(item)
        if not match:
            raise ValueError(f"bad edge {item!r}")
        edges.append(match.groups())
    return UnlabeledGraph(frozenset(edges))


def _parse_alignment(text: str) -> Tuple[Tuple[str, str], ...]:
    if text == "-":
        return ()
    pairs = []
    for item in text.split(","):
        t, sep, s = item.partition(">")
        if not sep or not t or not s:
            raise ValueError(f"bad alignment pair {item!r}")
        pairs.append((t, s))
    return tuple(pairs)


def format_model(model: Union[MonolingualModel, TransferModel]) -> str:
    """Canonical ModelFile text: lines grouped by type, then sorted by key fields."""
    typed = []
    if isinstance(model, MonolingualModel):
        typed += [("TOP", (w,), p) for w, p in model.top.items()]
        typed += [("DEP", (h, r, w), p) for (h, r, w), p in model.dependency.items()]
        typed += [("DET", (h, r, str(n)), p) for (h, r, n), p in model.detail.items()]
        typed += [("SEQ", (",".join(s),), p) for s, p in model.sequencing.items()]
    else:
        typed += [("LEX", (w, _multiset_text(m)), p) for (w, m), p in model.lexical.items()]
        typed += [("RULE", (r.rule_id,) + r.sort_key, r.probability) for r in model.rules]
    typed.sort(key=lambda item: (MODEL_TYPES.index(item[0]), item[1][1:] if item[0] == "RULE" else item[1]))
    return "".join("\t".join((kind, *key, format_probability(p))) + "\n" for kind, key, p in typed)


def save_model(model: Union[MonolingualModel, TransferModel], path: PathLike):
    with open(path, "w", encoding="utf-8") as f:
        f.write(format_model(model))
    logger.info("wrote model to %s", path)


def _model_lines(path: PathLike, allowed: Sequence[str]) -> Iterator[Tuple[int, str, List[str], float]]:
    seen = set()
    for number, text in _read_lines(path):
        if not text.strip() or text.startswith("#"):
            continue
        fields = text.split("\t")
        kind = fields[0]
        arity = {"TOP": 3, "DEP": 5, "DET": 5, "SEQ": 3, "LEX": 4, "RULE": 6}.get(kind)
        if arity is None:
            raise FormatError(path, number, f"unknown line type {kind!r}")
        if kind not in allowed:
            raise FormatError(path, number, f"{kind} lines do not belong in this model file")
        if len(fields) != arity:
            raise FormatError(path, number, f"{kind} lines have {arity} fields, got {len(fields)}")
        key = (kind, *fields[1:-1]) if kind != "RULE" else (kind, *fields[2:-1])
        if key in seen:
            raise FormatError(path, number, f"duplicate {kind} entry")
        seen.add(key)
        try:
            p = float(fields[-1])
        except ValueError:
            raise FormatError(path, number, f"probability {fields[-1]!r} is not a number") from None
        if not 0.0 <= p <= 1.0:
            raise FormatError(path, number, f"probability {p} outside [0, 1]")
        yield number, kind, fields[1:-1], p


def load_monolingual(path: PathLike) -> MonolingualModel:
    """
    Load a monolingual ModelFile (TOP, DEP, DET and SEQ lines).

    Args:
        path: Path to the model file

    Returns:
        The normalized MonolingualModel
    """
    top, dependency, detail, sequencing = {}, {}, {}, {}
    for number, kind, fields, p in _model_lines(path, ("TOP", "DEP", "DET", "SEQ")):
        try:
            if kind == "TOP":
                top[fields[0]] = p
            elif kind == "DEP":
                dependency[tuple(fields)] = p
            elif kind == "DET":
                n = int(fields[2])
                if n < 0:
                    raise ValueError("negative count")
                detail[fields[0], fields[1], n] = p
            else:
                sequencing[tuple(fields[0].split(","))] = p
        except ValueError as exc:
            raise FormatError(path, number, str(exc)) from None
    try:
        model = MonolingualModel(top, dependency, detail, sequencing)
    except MalformedInput as exc:
        raise FormatError(path, None, str(exc)) from exc
    model.check_normalization()
    return model


def load_transfer(path: PathLike) -> TransferModel:
    """
    Load a transfer ModelFile (LEX and RULE lines).

    Args:
        path: Path to the model file

    Returns:
        The normalized TransferModel
    """
    lexical, rules = {}, []
    for number, kind, fields, p in _model_lines(path, ("LEX", "RULE")):
        try:
            if kind == "LEX":
                lexical[fields[0], _parse_multiset(fields[1])] = p
            else:
                rule_id, source, target, alignment = fields
                rules.append(StructuralRule(rule_id, _parse_edges(source), _parse_edges(target),
                                            _parse_alignment(alignment), p))
        except ValueError as exc:
            raise FormatError(path, number, str(exc)) from None
    ids = [r.rule_id for r in rules]
    if len(set(ids)) != len(ids):
        raise FormatError(path, None, "rule ids must be unique")
    model = TransferModel(lexical, tuple(rules))
    model.check_normalization()
    return model
