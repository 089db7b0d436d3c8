from __future__ import annotations

from pathlib import Path

import pytest

from spontol import Corpus, parse_corpus

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def sour_grapes_text() -> str:
    return (DATA / "sour_grapes.txt").read_text()


@pytest.fixture(scope="session")
def sour_grapes(sour_grapes_text: str) -> Corpus:
    return parse_corpus(sour_grapes_text)
