import pytest

from kira.text import (
    STOP_WORDS,
    content_tokens,
    parse_citations,
    split_sentences,
    strip_citations,
    tokenize,
)


def test_tokenize_lowercases_and_splits_punctuation():
    assert tokenize("Chest X-ray: shows PNEUMONIA.") == [
        "chest", "x", "ray", "shows", "pneumonia",
    ]


def test_tokenize_keeps_digits():
    assert tokenize("region 12 at (64,128)") == ["region", "12", "at", "64", "128"]


def test_stop_word_list_is_frozen_at_50():
    assert len(STOP_WORDS) == 50
    assert "the" in STOP_WORDS and "pneumonia" not in STOP_WORDS


def test_content_tokens_drop_stop_words_and_dedupe():
    tokens = content_tokens("the image shows the image of a lesion")
    assert tokens == {"image", "shows", "lesion"}


def test_parse_citations():
    assert parse_citations("fluid [Evidence 2] and mass [Evidence 10].") == {2, 10}
    assert parse_citations("no citations here") == set()


def test_strip_citations_collapses_whitespace():
    out = strip_citations("opacity [Evidence 1] present [Evidence 2].")
    assert out == "opacity present ."


def test_split_sentences():
    parts = split_sentences("First finding. Second one! Third?")
    assert parts == ["First finding.", "Second one!", "Third?"]


def test_split_sentences_drops_empty_fragments():
    assert split_sentences("only one.   ") == ["only one."]
    assert split_sentences("...") == []


@pytest.mark.parametrize("text", ["", "   ", "\n\n"])
def test_split_sentences_empty_input(text):
    assert split_sentences(text) == []
