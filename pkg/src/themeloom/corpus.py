"""Corpus ingestion: one plain-text transcript per participant, tagged by group."""

from __future__ import annotations

import fnmatch
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

UNGROUPED = "ungrouped"


class IngestError(Exception):
    """Raised when a directory cannot be turned into a valid corpus."""


@dataclass(frozen=True)
class Document:
    """A single interview transcript; the unit of per-stage model input."""

    id: str
    group: str
    text: str
    word_count: int

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError(f"document {self.id!r} has empty text")
        expected = len(self.text.split())
        if self.word_count != expected:
            raise ValueError(
                f"document {self.id!r}: word_count {self.word_count} != {expected}"
            )

    @classmethod
    def from_text(cls, doc_id: str, group: str, text: str) -> "Document":
        return cls(id=doc_id, group=group, text=text, word_count=len(text.split()))

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "group": self.group,
            "text": self.text,
            "word_count": self.word_count,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Document":
        return cls(
            id=data["id"],
            group=data["group"],
            text=data["text"],
            word_count=data["word_count"],
        )


@dataclass(frozen=True)
class Corpus:
    """Immutable, deterministically ordered collection of documents."""

    documents: tuple[Document, ...]

    def __post_init__(self) -> None:
        ids = [d.id for d in self.documents]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate document ids: {dupes}")
        if ids != sorted(ids):
            raise ValueError("documents must be ordered lexicographically by id")

    @property
    def groups(self) -> set[str]:
        return {d.group for d in self.documents}

    def get(self, doc_id: str) -> Document:
        for doc in self.documents:
            if doc.id == doc_id:
                return doc
        raise KeyError(doc_id)

    def __len__(self) -> int:
        return len(self.documents)

    def to_dict(self) -> dict:
        return {
            "documents": [d.to_dict() for d in self.documents],
            "groups": sorted(self.groups),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Corpus":
        return cls(tuple(Document.from_dict(d) for d in data["documents"]))


def _assign_group(rel_path: str, group_map: Mapping[str, str]) -> str:
    # First matching pattern wins; patterns are matched against the
    # posix-style path relative to the corpus root, and against the bare
    # filename so "p*.txt" works at any depth.
    name = rel_path.rsplit("/", 1)[-1]
    for pattern, group in group_map.items():
        if fnmatch.fnmatch(rel_path, pattern) or fnmatch.fnmatch(name, pattern):
            return group
    return UNGROUPED


def ingest_corpus(root_path: str | Path, group_map: Mapping[str, str] | None = None) -> Corpus:
    """Read every .txt file under root_path into a Corpus.

    Line endings are normalized to "\\n"; every other character is kept
    verbatim because quote auditing depends on source fidelity.
    """
    root = Path(root_path)
    if not root.is_dir():
        raise IngestError(f"corpus root {root} is not a directory")
    group_map = group_map or {}

    documents: dict[str, Document] = {}
    for path in sorted(root.rglob("*.txt")):
        rel = path.relative_to(root).as_posix()
        try:
            raw = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise IngestError(f"cannot read {path}: {exc}") from exc
        text = raw.replace("\r\n", "\n").replace("\r", "\n")
        if not text.strip():
            raise IngestError(f"empty document: {path}")
        doc_id = path.stem
        if doc_id in documents:
            raise IngestError(f"duplicate document id {doc_id!r} (from {rel})")
        documents[doc_id] = Document.from_text(doc_id, _assign_group(rel, group_map), text)

    if not documents:
        raise IngestError("no documents")
    ordered = tuple(documents[k] for k in sorted(documents))
    return Corpus(ordered)


def count_participants(corpus: Corpus) -> tuple[dict[str, int], int]:
    """Per-group document counts plus the total; pure function of the corpus."""
    counts: dict[str, int] = {}
    for doc in corpus.documents:
        counts[doc.group] = counts.get(doc.group, 0) + 1
    ordered = {g: counts[g] for g in sorted(counts)}
    return ordered, len(corpus.documents)
