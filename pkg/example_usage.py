"""
Example usage of the Dependency Translator.

This script trains models on the bundled English-French toy bitext,
parses and translates a source tree, and decodes the toy n-best list.
"""

from dependency_translator import Decoder, rescore_reverse, tools
from dependency_translator.config import config
from dependency_translator.models import estimate_monolingual, estimate_transfer
from dependency_translator.models.monolingual import parse, score_sentence


def main():
    """Main example demonstrating the translation pipeline."""

    print("=" * 70)
    print("DEPENDENCY TRANSLATOR - EXAMPLE USAGE")
    print("=" * 70)
    print()

    # Train all three models from the toy bitext
    bitext = tools.read_bitext(config.DATA_DIR / "toy" / "en_fr.bitext")
    english = estimate_monolingual([r.source for r in bitext])
    french = estimate_monolingual([r.target for r in bitext])
    en_fr = estimate_transfer(bitext)
    print(f"Trained on {len(bitext)} sentence pairs: {len(en_fr.rules)} structural rules")
    print()

    # Example 1: Sentence probability and parsing
    print("-" * 70)
    print("EXAMPLE 1: Scoring and Parsing")
    print("-" * 70)
    sentence = ["john", "sees", "the", "cat"]
    print(f"P({' '.join(sentence)}) = {score_sentence(sentence, english):.6f}")
    for tree, p in parse(sentence, english, 3):
        print(f"   {p:.6f}  {tree.serialize()}")
    print()

    # Example 2: Translating a fixed source tree
    print("-" * 70)
    print("EXAMPLE 2: Translating a Tree")
    print("-" * 70)
    decoder = Decoder(english, en_fr, french)
    tree, _ = parse(sentence, english, 1)[0]
    for words, p in decoder.translate_tree(tree, k=3):
        print(f"   {p:.6f}  {' '.join(words)}")
    print()

    # Example 3: Decoding an n-best list in both modes
    print("-" * 70)
    print("EXAMPLE 3: Decoding Recognition Hypotheses")
    print("-" * 70)
    hyps = tools.read_nbest(config.DATA_DIR / "toy" / "nbest.txt")
    for mode in config.MODES:
        print(f"Mode: {mode}")
        for result in decoder.decode(hyps, k=3, mode=mode):
            print(f"   {result.score:.4f}  {result.hypothesis.target_string}")
    print()

    # Example 4: Reverse rescoring with a French-English transfer model
    print("-" * 70)
    print("EXAMPLE 4: Reverse Rescoring")
    print("-" * 70)
    fr_en = estimate_transfer([type(r)(r.target, r.source, _invert(r.alignment)) for r in bitext])
    for h in rescore_reverse(decoder.chains(hyps), french, fr_en)[:3]:
        factors = ", ".join(f"{name}={value:.3f}" for name, value in h.factors.items())
        print(f"   {h.total:.4f}  {h.target_string}  ({factors})")
    print()

    print("=" * 70)
    print("EXAMPLE COMPLETE")
    print("=" * 70)


def _invert(alignment):
    """One-to-one alignments only: swap the direction of every pair."""
    return type(alignment)(tuple((s, t) for t, s in alignment.pairs))


if __name__ == "__main__":
    try:
        main()
    except Exception as e:
        print(f"\nError: {str(e)}")
        print("\nMake sure you have installed dependencies: pip install -r requirements.txt")
        print()
        raise
