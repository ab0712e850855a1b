"""End-to-end tests of the command-line entry point."""

import pytest

from dependency_translator import oracle, tools
from dependency_translator.cli import main

JOHN_SEES_MARY = "1\tjohn\t2\tsubj\n2\tsees\t0\te\n3\tmary\t2\tobj\n"


@pytest.fixture
def models(data_dir):
    root = data_dir / "models"
    return {
        "lm_src": str(root / "john_sees_mary.lm"),
        "lm_tgt": str(root / "jean_voit_marie.lm"),
        "transfer": str(root / "en_fr_point_mass.tm"),
        "reverse": str(root / "fr_en_point_mass.tm"),
    }


def test_score_point_mass(models, capsys):
    assert main(["score", "--lm", models["lm_src"], "--sentence", "john sees mary"]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "1.000000000000"


def test_score_zero_probability(models, capsys):
    assert main(["score", "--lm", models["lm_src"], "--sentence", "sees john mary"]) == 0
    assert capsys.readouterr().out.splitlines() == ["0.000000000000", "-inf"]


def test_train_lm_writes_canonical_model(tmp_path, models, capsys):
    corpus = tmp_path / "one.corpus"
    corpus.write_text(JOHN_SEES_MARY, encoding="utf-8")
    out = tmp_path / "one.lm"
    assert main(["train-lm", "--corpus", str(corpus), "--out", str(out)]) == 0
    assert out.read_text(encoding="utf-8") == open(models["lm_src"], encoding="utf-8").read()


def test_train_transfer_then_translate(tmp_path, data_dir, capsys):
    out = tmp_path / "toy.tm"
    assert main(["train-transfer", "--bitext", str(data_dir / "toy" / "en_fr.bitext"), "--out", str(out),
                 "--lambda", "0"]) == 0
    assert tools.load_transfer(out).check_normalization()


def test_parse_prints_trees_with_scores(models, capsys):
    assert main(["parse", "--lm", models["lm_src"], "--sentence", "john sees mary", "--k", "3"]) == 0
    assert capsys.readouterr().out == "# 1\t1\n" + JOHN_SEES_MARY


def test_translate(tmp_path, models, capsys):
    tree = tmp_path / "source.corpus"
    tree.write_text(JOHN_SEES_MARY, encoding="utf-8")
    assert main(["translate", "--lm-src", models["lm_src"], "--transfer", models["transfer"],
                 "--lm-tgt", models["lm_tgt"], "--tree", str(tree)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("# 1\tjohn sees mary\t")
    assert lines[1:] == ["jean voit marie\t1"]


def test_decode_point_mass(tmp_path, models, capsys):
    nbest = tmp_path / "nbest.txt"
    nbest.write_text("-1.0\tjohn sees mary\n-0.5\tsees john mary\n", encoding="utf-8")
    assert main(["decode", "--lm-src", models["lm_src"], "--transfer", models["transfer"],
                 "--lm-tgt", models["lm_tgt"], "--nbest", str(nbest)]) == 0
    (line,) = capsys.readouterr().out.splitlines()
    rank, score, target, factors = line.split("\t")
    assert (rank, score, target) == ("1", "-1", "jean voit marie")
    assert factors.split()[0] == "acoustic=-1"


def test_decode_with_reverse_factors(tmp_path, models, capsys):
    nbest = tmp_path / "nbest.txt"
    nbest.write_text("-1.0\tjohn sees mary\n", encoding="utf-8")
    assert main(["decode", "--lm-src", models["lm_src"], "--transfer", models["transfer"],
                 "--lm-tgt", models["lm_tgt"], "--nbest", str(nbest),
                 "--reverse", models["lm_tgt"], models["reverse"]]) == 0
    (line,) = capsys.readouterr().out.splitlines()
    assert "target_content=0" in line
    assert "reverse_transfer=0" in line
    assert "source_content" not in line


def test_decode_toy_best_matches_oracle(data_dir, toy_models, tmp_path, capsys):
    src, tm, tgt = toy_models
    paths = {}
    for name, model in (("src.lm", src), ("toy.tm", tm), ("tgt.lm", tgt)):
        paths[name] = str(tmp_path / name)
        tools.save_model(model, paths[name])
    nbest = data_dir / "toy" / "nbest.txt"
    assert main(["decode", "--lm-src", paths["src.lm"], "--transfer", paths["toy.tm"],
                 "--lm-tgt", paths["tgt.lm"], "--nbest", str(nbest), "--mode", "max", "--k", "1"]) == 0
    (line,) = capsys.readouterr().out.splitlines()
    best = oracle.oracle_chains(tools.read_nbest(nbest), src, tm, tgt)[0]
    assert line.split("\t")[2] == " ".join(best[0])


def test_malformed_input_exits_with_one(tmp_path, capsys):
    corpus = tmp_path / "bad.corpus"
    corpus.write_text("1\tjohn\t2\tsubj\n", encoding="utf-8")
    assert main(["train-lm", "--corpus", str(corpus), "--out", str(tmp_path / "x.lm")]) == 1
    assert "bad.corpus:1" in capsys.readouterr().err


def test_missing_file_exits_with_one(tmp_path, capsys):
    assert main(["score", "--lm", str(tmp_path / "absent.lm"), "--sentence", "john"]) == 1


def test_too_large_exits_with_two(models, capsys):
    assert main(["score", "--lm", models["lm_src"], "--sentence", " ".join(["john"] * 9)]) == 2
    assert "enumeration bound" in capsys.readouterr().err


def test_verification_failure_exits_with_three(monkeypatch, capsys):
    monkeypatch.setattr(oracle, "oracle_sentence_prob", lambda words, m: 2.0)
    assert main(["verify", "--suite", "lm"]) == 3
    out = capsys.readouterr().out
    assert out.startswith("lm\tcases=")
    assert out.rstrip().endswith("FAILED")


def test_verify_decode_suite(data_dir, capsys):
    assert main(["verify", "--suite", "decode", "--data-dir", str(data_dir)]) == 0
    assert capsys.readouterr().out.rstrip().endswith("ok")


def test_usage_errors_exit_as_malformed_input(models):
    with pytest.raises(SystemExit) as info:
        main(["parse", "--lm", models["lm_src"], "--sentence", "john", "--k", "0"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["decode", "--mode", "best"])
    assert info.value.code == 1
