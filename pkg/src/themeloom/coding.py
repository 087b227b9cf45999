"""Initial coding stage: one zero-shot coding call per document.

Also hosts the monolithic single-prompt baseline kept only for comparison;
the one-call-per-document vs one-call-total distinction is structural, not a
matter of prompt wording.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from . import prompts
from .audit import normalize
from .corpus import Corpus, Document
from .gateway import (
    ChatRequest,
    FinishReason,
    Gateway,
    GenerationParams,
    MalformedOutputError,
    request_json,
)

log = logging.getLogger(__name__)

TOKENS_PER_WORD = 1.3


class CodingError(Exception):
    """A document whose model output stayed malformed after the repair retry."""

    def __init__(self, doc_id: str, message: str):
        super().__init__(f"coding failed for {doc_id!r}: {message}")
        self.doc_id = doc_id


@dataclass(frozen=True)
class ValidationBounds:
    max_name_words: int = 5
    description_words: tuple[int, int] = (25, 100)
    min_quote_words: int = 150


@dataclass(frozen=True)
class InitialCode:
    code_name: str
    description: str
    quote: str
    source_doc: str
    index: int

    @property
    def ref(self) -> str:
        return f"{self.source_doc}:{self.index}"

    def to_dict(self) -> dict:
        return {
            "code_name": self.code_name,
            "description": self.description,
            "quote": self.quote,
            "source_doc": self.source_doc,
            "index": self.index,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "InitialCode":
        return cls(
            code_name=data["code_name"],
            description=data["description"],
            quote=data["quote"],
            source_doc=data["source_doc"],
            index=data["index"],
        )


@dataclass
class CodeSet:
    source_doc: str
    codes: list[InitialCode]
    params_used: GenerationParams
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        indices = [c.index for c in self.codes]
        if indices != list(range(len(self.codes))):
            raise ValueError(f"code indices not contiguous for {self.source_doc!r}")

    def to_dict(self) -> dict:
        return {
            "source_doc": self.source_doc,
            "params_used": self.params_used.to_dict(),
            "codes": [c.to_dict() for c in self.codes],
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CodeSet":
        return cls(
            source_doc=data["source_doc"],
            codes=[InitialCode.from_dict(c) for c in data["codes"]],
            params_used=GenerationParams.from_dict(data["params_used"]),
            warnings=list(data.get("warnings", [])),
        )


@dataclass(frozen=True)
class BaselineResult:
    raw_text: str
    params_used: GenerationParams
    warnings: list[str]

    def to_dict(self) -> dict:
        return {
            "raw_text": self.raw_text,
            "params_used": self.params_used.to_dict(),
            "warnings": list(self.warnings),
        }


def validate_code(code: InitialCode, doc: Document, bounds: ValidationBounds | None = None) -> list[str]:
    """Shape warnings for one code; validation never rejects, only flags."""
    bounds = bounds or ValidationBounds()
    warnings: list[str] = []
    name_words = len(code.code_name.split())
    if name_words > bounds.max_name_words:
        warnings.append(
            f"{code.ref}: name exceeds {bounds.max_name_words} words ({name_words})"
        )
    desc_words = len(code.description.split())
    lo, hi = bounds.description_words
    if not lo <= desc_words <= hi:
        warnings.append(
            f"{code.ref}: description length {desc_words} words outside [{lo}, {hi}]"
        )
    quote_words = len(code.quote.split())
    if quote_words < bounds.min_quote_words:
        warnings.append(
            f"{code.ref}: quote length {quote_words} words below minimum {bounds.min_quote_words}"
        )
    # Verbatim check only; the audit stage delivers the final verdict.
    quote_norm = normalize(code.quote).text.strip(" ")
    if quote_norm and quote_norm not in normalize(doc.text).text:
        warnings.append(f"{code.ref}: unverified quote")
    return warnings


def split_into_chunks(text: str, max_words: int) -> list[str]:
    """Greedy paragraph packing; a single oversized paragraph stays whole."""
    paragraphs = [p for p in text.split("\n\n") if p.strip()]
    chunks: list[str] = []
    current: list[str] = []
    current_words = 0
    for para in paragraphs:
        words = len(para.split())
        if current and current_words + words > max_words:
            chunks.append("\n\n".join(current))
            current, current_words = [], 0
        current.append(para)
        current_words += words
    if current:
        chunks.append("\n\n".join(current))
    return chunks or [text]


def _parse_final_codes(payload, doc_id: str, start_index: int) -> tuple[list[InitialCode], list[str]]:
    if not isinstance(payload, dict) or not isinstance(payload.get("final_codes"), list):
        raise MalformedOutputError(
            f"expected an object with a 'final_codes' array, got {type(payload).__name__}"
        )
    codes: list[InitialCode] = []
    warnings: list[str] = []
    index = start_index
    for item in payload["final_codes"]:
        if not isinstance(item, dict):
            warnings.append(f"{doc_id}: dropped non-object code entry")
            continue
        name = str(item.get("code_name", "")).strip()
        quote = str(item.get("quote", "")).strip()
        description = str(item.get("description", "")).strip()
        if not name or not quote:
            warnings.append(f"{doc_id}: dropped code with empty name or quote")
            continue
        codes.append(
            InitialCode(
                code_name=name,
                description=description,
                quote=quote,
                source_doc=doc_id,
                index=index,
            )
        )
        index += 1
    return codes, warnings


def code_document(
    gateway: Gateway,
    doc: Document,
    params: GenerationParams,
    prompt_template: str,
    mode: str | None = None,
    bounds: ValidationBounds | None = None,
    max_chunk_words: int | None = None,
) -> CodeSet:
    """Generate the initial codes for one document.

    Oversized documents are chunked at paragraph boundaries and coded chunk by
    chunk into a single CodeSet; everything else is one gateway call.
    """
    prompts.require_slot(prompt_template, "one_interview_data")

    if max_chunk_words and doc.word_count > max_chunk_words:
        pieces = split_into_chunks(doc.text, max_chunk_words)
    else:
        pieces = [doc.text]

    codes: list[InitialCode] = []
    warnings: list[str] = []
    for piece in pieces:
        rendered = prompts.render(prompt_template, one_interview_data=piece)
        request = ChatRequest(params=params, user_text=rendered)
        try:
            payload, _response = request_json(gateway, request, mode)
            piece_codes, piece_warnings = _parse_final_codes(payload, doc.id, len(codes))
        except MalformedOutputError as exc:
            raise CodingError(doc.id, str(exc)) from exc
        codes.extend(piece_codes)
        warnings.extend(piece_warnings)

    for code in codes:
        warnings.extend(validate_code(code, doc, bounds))
    return CodeSet(source_doc=doc.id, codes=codes, params_used=params, warnings=warnings)


def estimate_tokens(text: str) -> int:
    return round(len(text.split()) * TOKENS_PER_WORD)


def run_monolithic_baseline(
    gateway: Gateway,
    corpus: Corpus,
    params: GenerationParams,
    prompt_template: str,
    mode: str | None = None,
    token_limit: int = 100_000,
) -> BaselineResult:
    """Feed the whole corpus to one prompt and keep the raw reply unparsed."""
    if not len(corpus):
        raise ValueError("corpus is empty")
    prompts.require_slot(prompt_template, "all_interview_data")

    blocks = [f"--- {doc.id} ---\n{doc.text}" for doc in corpus.documents]
    rendered = prompts.render(prompt_template, all_interview_data="\n\n".join(blocks))

    warnings: list[str] = []
    estimate = estimate_tokens(rendered)
    if estimate > token_limit:
        warnings.append(
            f"input likely exceeds context (estimated {estimate} tokens > limit {token_limit})"
        )

    response = gateway.complete(ChatRequest(params=params, user_text=rendered), mode)
    if response.finish_reason is FinishReason.TRUNCATED:
        warnings.append("baseline response was truncated")
    return BaselineResult(raw_text=response.raw_text, params_used=params, warnings=warnings)
