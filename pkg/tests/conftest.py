"""Shared fixtures: bundled toy data and hand-built point-mass models."""

import os
import sys
from pathlib import Path

import pytest

# Add parent directory to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from dependency_translator import tools
from dependency_translator.models import (
    MonolingualModel,
    estimate_monolingual,
    estimate_transfer,
)
from dependency_translator.models.monolingual import clear_span_tables

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture(scope="session")
def data_dir():
    return DATA_DIR


@pytest.fixture(scope="session")
def toy_bitext():
    return tools.read_bitext(DATA_DIR / "toy" / "en_fr.bitext")


@pytest.fixture(scope="session")
def toy_models(toy_bitext):
    """(source LM, transfer model, target LM) estimated from the toy bitext."""
    src = estimate_monolingual([r.source for r in toy_bitext])
    tgt = estimate_monolingual([r.target for r in toy_bitext])
    return src, estimate_transfer(toy_bitext), tgt


@pytest.fixture
def john_sees_mary():
    return tools.load_monolingual(DATA_DIR / "models" / "john_sees_mary.lm")


@pytest.fixture
def jean_voit_marie():
    return tools.load_monolingual(DATA_DIR / "models" / "jean_voit_marie.lm")


@pytest.fixture
def en_fr_point_mass():
    return tools.load_transfer(DATA_DIR / "models" / "en_fr_point_mass.tm")


@pytest.fixture
def fr_en_point_mass():
    return tools.load_transfer(DATA_DIR / "models" / "fr_en_point_mass.tm")


@pytest.fixture
def single_word_model():
    """top(hello) = 0.4; hello takes no dependents."""
    return MonolingualModel(
        top={"hello": 0.4, "bye": 0.6},
        sequencing={("e",): 1.0},
    )


@pytest.fixture(autouse=True, scope="session")
def span_tables():
    yield
    clear_span_tables()
