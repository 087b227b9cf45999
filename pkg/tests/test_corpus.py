from __future__ import annotations

import pytest

from themeloom.corpus import Corpus, Document, IngestError, count_participants, ingest_corpus


def write_corpus(root, spec):
    for name, text in spec.items():
        path = root / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")


class TestIngest:
    def test_single_file(self, tmp_path):
        write_corpus(tmp_path, {"a.txt": "hello world"})
        corpus = ingest_corpus(tmp_path)
        assert len(corpus) == 1
        doc = corpus.documents[0]
        assert doc.id == "a"
        assert doc.word_count == 2
        assert doc.group == "ungrouped"

    def test_group_map_and_counts(self, tmp_path):
        spec = {f"p{i:02d}.txt": f"parent interview {i}" for i in range(1, 13)}
        spec.update({f"t{i:02d}.txt": f"practitioner interview {i}" for i in range(1, 22)})
        write_corpus(tmp_path, spec)
        corpus = ingest_corpus(tmp_path, {"p*.txt": "parents", "t*.txt": "practitioners"})
        assert len(corpus) == 33
        assert corpus.groups == {"parents", "practitioners"}
        counts, total = count_participants(corpus)
        assert counts == {"parents": 12, "practitioners": 21}
        assert total == 33

    def test_empty_directory(self, tmp_path):
        with pytest.raises(IngestError, match="no documents"):
            ingest_corpus(tmp_path)

    def test_empty_file_named_in_error(self, tmp_path):
        write_corpus(tmp_path, {"a.txt": "ok", "bad.txt": "   \n"})
        with pytest.raises(IngestError, match="bad.txt"):
            ingest_corpus(tmp_path)

    def test_missing_root(self, tmp_path):
        with pytest.raises(IngestError):
            ingest_corpus(tmp_path / "nope")

    def test_line_endings_normalized(self, tmp_path):
        (tmp_path / "a.txt").write_bytes(b"one\r\ntwo\rthree\n")
        corpus = ingest_corpus(tmp_path)
        assert corpus.documents[0].text == "one\ntwo\nthree\n"

    def test_unmatched_files_ungrouped(self, tmp_path):
        write_corpus(tmp_path, {"p01.txt": "a b", "misc.txt": "c d"})
        corpus = ingest_corpus(tmp_path, {"p*.txt": "parents"})
        assert corpus.get("misc").group == "ungrouped"
        assert corpus.get("p01").group == "parents"

    def test_deterministic(self, tmp_path):
        spec = {f"x{i}.txt": f"text number {i} with words" for i in range(9)}
        write_corpus(tmp_path, spec)
        first = ingest_corpus(tmp_path, {"x*.txt": "all"})
        second = ingest_corpus(tmp_path, {"x*.txt": "all"})
        assert first == second
        assert [d.id for d in first.documents] == sorted(d.id for d in first.documents)


class TestCountParticipants:
    def test_single_ungrouped(self, tmp_path):
        write_corpus(tmp_path, {"only.txt": "words here"})
        counts, total = count_participants(ingest_corpus(tmp_path))
        assert counts == {"ungrouped": 1}
        assert total == 1

    @pytest.mark.parametrize("k", [1, 3, 7])
    def test_symmetric_groups(self, tmp_path, k):
        spec = {}
        for i in range(k):
            spec[f"a{i}.txt"] = "group a text"
            spec[f"b{i}.txt"] = "group b text"
        write_corpus(tmp_path, spec)
        corpus = ingest_corpus(tmp_path, {"a*.txt": "a", "b*.txt": "b"})
        counts, total = count_participants(corpus)
        assert counts == {"a": k, "b": k}
        assert total == 2 * k

    def test_total_equals_document_count(self, tmp_path):
        spec = {f"f{i}.txt": "some words" for i in range(5)}
        write_corpus(tmp_path, spec)
        corpus = ingest_corpus(tmp_path)
        _, total = count_participants(corpus)
        assert total == len(corpus.documents)


class TestInvariants:
    def test_word_count_enforced(self):
        with pytest.raises(ValueError):
            Document(id="x", group="g", text="two words", word_count=5)

    def test_empty_text_rejected(self):
        with pytest.raises(ValueError):
            Document(id="x", group="g", text="   ", word_count=0)

    def test_duplicate_ids_rejected(self):
        a = Document.from_text("same", "g", "text one")
        b = Document.from_text("same", "g", "text two")
        with pytest.raises(ValueError, match="duplicate"):
            Corpus((a, b))

    def test_order_enforced(self):
        a = Document.from_text("a", "g", "text")
        b = Document.from_text("b", "g", "text")
        with pytest.raises(ValueError, match="lexicographic"):
            Corpus((b, a))

    def test_roundtrip(self, tmp_path):
        (tmp_path / "a.txt").write_text("round trip text", encoding="utf-8")
        corpus = ingest_corpus(tmp_path)
        assert Corpus.from_dict(corpus.to_dict()) == corpus
