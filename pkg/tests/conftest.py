from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from themeloom.corpus import Corpus, Document
from themeloom.gateway import ChatResponse, FinishReason, Provenance

FIXTURES = Path(__file__).parent / "fixtures"


class FakeGateway:
    """Gateway standing: replays a queue of canned response texts."""

    def __init__(self, *texts: str):
        self.queue = list(texts)
        self.requests = []
        self.live_calls = 0

    def push(self, text: str) -> None:
        self.queue.append(text)

    def complete(self, request, mode=None) -> ChatResponse:
        self.requests.append(request)
        if not self.queue:
            raise AssertionError("FakeGateway queue exhausted")
        return ChatResponse(self.queue.pop(0), FinishReason.COMPLETE, Provenance.REPLAY)


@pytest.fixture
def fake_gateway():
    return FakeGateway


def make_doc(doc_id: str, text: str, group: str = "ungrouped") -> Document:
    return Document.from_text(doc_id, group, text)


def make_corpus(*docs: Document) -> Corpus:
    return Corpus(tuple(sorted(docs, key=lambda d: d.id)))


PARENTS_QUESTION = (
    "How do parents with long-term mental health difficulties experience parenting "
    "support, and how do practitioners understand that experience?"
)


def init_parents_replay_project(directory):
    """Project wired to the committed parents corpus + recorded cache, replay mode."""
    from themeloom.project import init_project

    return init_project(
        directory,
        corpus_root=str((FIXTURES / "parents" / "corpus").resolve()),
        overrides={
            "model": "fixture-model",
            "mode": "replay",
            "cache_dir": str((FIXTURES / "parents" / "cache").resolve()),
            "group_map": {"p*.txt": "parents"},
            "research_question": PARENTS_QUESTION,
            "min_quote_words": 3,
            "description_words": (5, 200),
            "themes_n": None,
        },
        copy_prompts=False,
    )


def run_parents_pipeline(project, stages=("ingest", "code", "dedup", "themes", "audit", "report")):
    from themeloom.pipeline import run_stage

    return {stage: run_stage(project, stage) for stage in stages}


@pytest.fixture
def tiny_corpus() -> Corpus:
    return make_corpus(
        make_doc(
            "d1",
            "I worry about the school run every single morning. "
            "The support group made a real difference to us last year. "
            "Nobody tells you how hard the nights can be.",
            group="parents",
        ),
        make_doc(
            "d2",
            "We try to keep appointments short and focused on the child. "
            "Funding for the family sessions was cut again this spring.",
            group="practitioners",
        ),
    )
