from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import windows_oracle
from questfill.corpus import SourceDocument
from questfill.splitter import (
    SplitConfig,
    read_chunks,
    split_flat,
    split_recursive,
    write_chunks,
)


def doc(text: str) -> SourceDocument:
    return SourceDocument("doc1", "mem", text, "und", "prose")


def flat_cfg(size, overlap=0):
    return SplitConfig(chunk_size=size, overlap=overlap, strategy="flat")


def rec_cfg(size, overlap=0, separators=("\n\n", "\n", " ", "")):
    return SplitConfig(chunk_size=size, overlap=overlap, strategy="recursive",
                       separators=separators)


class TestSplitConfig:
    def test_overlap_must_be_smaller(self):
        with pytest.raises(ValueError):
            SplitConfig(chunk_size=4, overlap=4)

    def test_separators_must_end_empty(self):
        with pytest.raises(ValueError):
            SplitConfig(separators=("\n\n", "\n"))


class TestSplitFlat:
    def test_no_overlap(self):
        texts = [c.text for c in split_flat(doc("abcdefghij"), flat_cfg(4))]
        assert texts == ["abcd", "efgh", "ij"]

    def test_with_overlap(self):
        # windows at 0, 2, 4, 6; the window ending at len stops the scan
        texts = [c.text for c in split_flat(doc("abcdefghij"), flat_cfg(4, 2))]
        assert texts == ["abcd", "cdef", "efgh", "ghij"]

    def test_empty_text(self):
        assert split_flat(doc(""), flat_cfg(4)) == []

    def test_lossless_at_zero_overlap(self):
        text = "Lorem ipsum dolor sit amet, consetetur sadipscing elitr."
        chunks = split_flat(doc(text), flat_cfg(7))
        assert "".join(c.text for c in chunks) == text

    def test_offsets_match_parent(self):
        text = "abcdefghijklmno"
        for c in split_flat(doc(text), flat_cfg(4, 1)):
            assert text[c.char_start:c.char_end] == c.text

    def test_matches_oracle_exhaustively(self):
        # full sweep also runs in acceptance with its time budget
        text = "x" * 50
        base = "abcdefghij" * 5
        for size in range(1, 12):
            for overlap in range(0, size):
                got = [c.text for c in split_flat(doc(base), flat_cfg(size, overlap))]
                assert got == windows_oracle(base, size, overlap), (size, overlap)

    @given(st.integers(0, 120), st.integers(1, 20), st.integers(0, 19))
    @settings(max_examples=200, deadline=None)
    def test_chunk_count_formula(self, length, size, overlap):
        if overlap >= size:
            return
        text = "ab" * (length // 2) + "a" * (length % 2)
        chunks = split_flat(doc(text), flat_cfg(size, overlap))
        if not text:
            assert chunks == []
        else:
            expected = math.ceil(max(len(text) - overlap, 1) / (size - overlap))
            assert len(chunks) == expected


class TestSplitRecursive:
    def test_paragraph_split(self):
        texts = [c.text for c in split_recursive(doc("aaa\n\nbbb"), rec_cfg(4))]
        assert texts == ["aaa", "bbb"]

    def test_word_split_with_merge(self):
        texts = [c.text for c in split_recursive(doc("aaaa bbbb cccc"), rec_cfg(9))]
        assert texts == ["aaaa bbbb", "cccc"]

    def test_short_text_single_chunk(self):
        texts = [c.text for c in split_recursive(doc("short"), rec_cfg(100))]
        assert texts == ["short"]

    def test_budget_respected(self):
        text = ("Ein Absatz mit mehreren Worten.\n\n"
                "Noch ein Absatz, der etwas laenger ist und geteilt werden muss.\n"
                "Und eine dritte Zeile dazu.")
        for size in (10, 25, 40, 80):
            for c in split_recursive(doc(text), rec_cfg(size)):
                assert len(c.text) <= size

    def test_overlap_keeps_whole_pieces(self):
        text = "aaaa bbbb cccc"
        chunks = split_recursive(doc(text), rec_cfg(9, overlap=4))
        assert [c.text for c in chunks] == ["aaaa bbbb", "bbbb cccc"]

    def test_all_content_covered(self):
        text = ("Zugriff nur nach Freigabe.\n\nPasswoerter rotieren alle 90 Tage. "
                "Backups laufen taeglich.\nVerschluesselung ist Pflicht.")
        chunks = split_recursive(doc(text), rec_cfg(30))
        covered = set()
        for c in chunks:
            covered.update(range(c.char_start, c.char_end))
        for i, ch in enumerate(text):
            if ch not in ("\n", " "):
                assert i in covered, f"char {i!r} ({ch!r}) lost"

    def test_offsets_are_parent_substrings(self):
        text = "Erster Teil.\n\nZweiter Teil mit mehr Inhalt und Worten darin."
        for overlap in (0, 5):
            for c in split_recursive(doc(text), rec_cfg(20, overlap)):
                assert text[c.char_start:c.char_end] == c.text

    def test_char_fallback_for_unbroken_text(self):
        chunks = split_recursive(doc("a" * 25), rec_cfg(10))
        assert [c.text for c in chunks] == ["a" * 10, "a" * 10, "a" * 5]

    def test_seq_and_start_monotone(self):
        text = "word " * 50
        chunks = split_recursive(doc(text.strip()), rec_cfg(12, overlap=4))
        assert [c.seq for c in chunks] == list(range(len(chunks)))
        starts = [c.char_start for c in chunks]
        assert starts == sorted(starts)


class TestChunkSerialization:
    def test_jsonl_round_trip(self, tmp_path):
        text = "Absatz eins.\n\nAbsatz zwei ist laenger und wird geteilt."
        chunks = split_recursive(doc(text), rec_cfg(20))
        path = tmp_path / "chunks.jsonl"
        write_chunks(path, chunks)
        loaded = read_chunks(path)
        assert loaded == chunks
