"""Deterministic quote-provenance verification against the source corpus.

Every quote in the analysis is classified as verbatim, modified (ellipsis or
light edit) or fabricated. No model calls happen here; verdicts are a pure
function of (quote, corpus, thresholds, seed).
"""

from __future__ import annotations

import random
import re
import string
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from math import ceil, floor
from typing import Iterable, Sequence

import numpy as np

from .corpus import Corpus, Document

ELLIPSIS = "..."

# Phase A: single-character canonicalization.
_CHAR_MAP = {
    "…": "...",  # horizontal ellipsis
    "‘": "'",
    "’": "'",
    "“": '"',
    "”": '"',
    "–": "-",  # en dash
    "—": "-",  # em dash
}

# Phase B: structural rules. Dots and bracketed ellipses are grouped as one
# maximal run so the canonical "..." can never recombine with an adjacent dot
# into a fresh collapsible group on a second pass (idempotence).
_BRACKET_UNIT = r"\[\s*\.(?:\s*\.){2,}\s*\]"
_ELLIPSIS_RUN = re.compile(rf"(?:{_BRACKET_UNIT}|\.)(?:\s*(?:{_BRACKET_UNIT}|\.))*")
_WS_RUN = re.compile(r"\s+")


class Verdict(str, Enum):
    VERBATIM = "verbatim"
    MODIFIED_ELLIPSIS = "modified_ellipsis"
    MODIFIED_EDIT = "modified_edit"
    FABRICATED = "fabricated"


@dataclass(frozen=True)
class AuditConfig:
    max_gap_chars: int = 1000
    edit_threshold: float = 0.85
    window_ratio: float = 0.25
    match_threshold: float = 0.8


@dataclass(frozen=True)
class NormalizedText:
    """Canonical text plus per-character offsets back into the original."""

    text: str
    starts: tuple[int, ...]
    ends: tuple[int, ...]

    def to_original(self, start: int, end: int) -> tuple[int, int]:
        """Map a canonical [start, end) span to original offsets."""
        if start >= end:
            return (self.starts[start] if start < len(self.starts) else 0, 0)
        return self.starts[start], self.ends[end - 1]


def normalize(text: str) -> NormalizedText:
    """Canonicalize whitespace, quote characters, dashes and ellipses.

    Two passes keep the transform idempotent: character substitutions first
    (so a one-character ellipsis becomes dots before structural rules run),
    then structural collapsing of dot groups, bracketed ellipses and
    whitespace runs. Case is preserved.
    """
    # Phase A: per-character substitutions, tracking original offsets.
    chars: list[str] = []
    spans: list[tuple[int, int]] = []
    for i, ch in enumerate(text):
        repl = _CHAR_MAP.get(ch, ch)
        for out in repl:
            chars.append(out)
            spans.append((i, i + 1))
    inter = "".join(chars)

    out_chars: list[str] = []
    out_spans: list[tuple[int, int]] = []
    i = 0
    n = len(inter)
    while i < n:
        if inter[i] in ".[":
            m = _ELLIPSIS_RUN.match(inter, i)
            # One or two bare dots stay as they are; anything more, or any
            # bracketed form, is an ellipsis.
            if m and ("[" in m.group() or m.group().count(".") >= 3):
                src = (spans[i][0], spans[m.end() - 1][1])
                for ch in ELLIPSIS:
                    out_chars.append(ch)
                    out_spans.append(src)
                i = m.end()
                continue
        m = _WS_RUN.match(inter, i)
        if m:
            out_chars.append(" ")
            out_spans.append((spans[i][0], spans[m.end() - 1][1]))
            i = m.end()
            continue
        out_chars.append(inter[i])
        out_spans.append(spans[i])
        i += 1

    return NormalizedText(
        text="".join(out_chars),
        starts=tuple(s for s, _ in out_spans),
        ends=tuple(e for _, e in out_spans),
    )


@dataclass(frozen=True)
class Evidence:
    """Match spans (original offsets) or the best similarity score found."""

    spans: tuple[tuple[int, int], ...] = ()
    fragments: tuple[str, ...] = ()
    score: float | None = None

    def to_dict(self) -> dict:
        return {
            "spans": [list(s) for s in self.spans],
            "fragments": list(self.fragments),
            "score": self.score,
        }


@dataclass(frozen=True)
class QuoteAuditRecord:
    code_ref: str
    quote: str
    verdict: Verdict
    matched_doc: str | None
    evidence: Evidence

    def to_dict(self) -> dict:
        return {
            "code_ref": self.code_ref,
            "quote": self.quote,
            "verdict": self.verdict.value,
            "matched_doc": self.matched_doc,
            "evidence": self.evidence.to_dict(),
        }


@dataclass(frozen=True)
class AuditSummary:
    """Verdict counts and percentages; modified folds ellipsis and edit together."""

    counts: dict[str, int]
    percentages: dict[str, float]
    sample_size: int

    @classmethod
    def from_counts(cls, verbatim: int, modified: int, fabricated: int) -> "AuditSummary":
        total = verbatim + modified + fabricated
        counts = {"verbatim": verbatim, "modified": modified, "fabricated": fabricated}
        if total:
            percentages = {k: 100.0 * v / total for k, v in counts.items()}
        else:
            percentages = {k: 0.0 for k in counts}
        return cls(counts=counts, percentages=percentages, sample_size=total)

    @classmethod
    def from_records(cls, records: Sequence[QuoteAuditRecord]) -> "AuditSummary":
        verbatim = sum(1 for r in records if r.verdict is Verdict.VERBATIM)
        modified = sum(
            1 for r in records if r.verdict in (Verdict.MODIFIED_ELLIPSIS, Verdict.MODIFIED_EDIT)
        )
        fabricated = sum(1 for r in records if r.verdict is Verdict.FABRICATED)
        return cls.from_counts(verbatim, modified, fabricated)

    def to_dict(self) -> dict:
        return {
            "counts": dict(self.counts),
            "percentages": {k: round(v, 6) for k, v in self.percentages.items()},
            "sample_size": self.sample_size,
        }


class CorpusIndex:
    """Normalized view of a corpus, built once and shared across quote checks."""

    def __init__(self, corpus: Corpus):
        self.corpus = corpus
        self.normalized: list[tuple[Document, NormalizedText]] = [
            (doc, normalize(doc.text)) for doc in corpus.documents
        ]


def window_bounds(quote_len: int, ratio: float) -> tuple[int, int]:
    """Candidate window lengths: within +/- ratio of the quote length."""
    lo = max(1, ceil((1.0 - ratio) * quote_len))
    hi = max(1, floor((1.0 + ratio) * quote_len))
    return lo, hi


def _codes(text: str) -> np.ndarray:
    return np.fromiter((ord(c) for c in text), dtype=np.int64, count=len(text))


def _min_end_distances(q: np.ndarray, t: np.ndarray) -> np.ndarray:
    """For each end j, the minimum edit distance of q to any substring of t ending at j.

    Standard approximate-matching DP with a free start (first row zero); the
    horizontal insertion chain is vectorized with a prefix-minimum trick.
    """
    n = len(t)
    idx = np.arange(n + 1)
    prev = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, len(q) + 1):
        cand = np.empty(n + 1, dtype=np.int64)
        cand[0] = i
        cand[1:] = np.minimum(prev[:-1] + (t != q[i - 1]), prev[1:] + 1)
        # cur[j] = min(cand[k] + (j - k)) over k <= j
        prev = np.minimum.accumulate(cand - idx) + idx
    return prev


def _suffix_distances(q: np.ndarray, seg: np.ndarray) -> np.ndarray:
    """Edit distance of q to every suffix of seg; result[k] is for the suffix of length k."""
    rq = q[::-1]
    rs = seg[::-1]
    n = len(rs)
    idx = np.arange(n + 1)
    prev = idx.copy().astype(np.int64)
    for i in range(1, len(rq) + 1):
        cand = np.empty(n + 1, dtype=np.int64)
        cand[0] = i
        cand[1:] = np.minimum(prev[:-1] + (rs != rq[i - 1]), prev[1:] + 1)
        prev = np.minimum.accumulate(cand - idx) + idx
    return prev


def best_window_similarity(
    quote_norm: str, doc_norm: str, cfg: AuditConfig
) -> tuple[float, tuple[int, int] | None]:
    """Exact maximum of 1 - dist/max(len) over windows within the length bounds.

    A cheap end-position filter prunes ends that provably cannot reach the
    threshold; every surviving end is verified exactly, so the verdict (and
    the score whenever it clears the threshold) matches full enumeration.
    """
    m = len(quote_norm)
    n = len(doc_norm)
    lo, hi = window_bounds(m, cfg.window_ratio)
    if m == 0 or n < lo:
        return 0.0, None
    q = _codes(quote_norm)
    t = _codes(doc_norm)
    e = _min_end_distances(q, t)  # e[j] over ends j = 0..n

    # Every window with similarity >= threshold has distance <= this bound at
    # its end; the epsilon keeps integer distances sitting exactly on the
    # boundary inside the candidate set despite float rounding.
    bound = (1.0 - cfg.edit_threshold) * max(m, hi) + 1e-9
    ends = [j for j in range(1, n + 1) if e[j] <= bound]
    if not ends:
        # Nothing can clear the threshold; still verify the most promising
        # ends so fabricated records carry a meaningful best score.
        e_min = int(e[1:].min())
        ends = [j for j in range(1, n + 1) if e[j] <= e_min + 1][:50]

    best_score = 0.0
    best_span: tuple[int, int] | None = None
    for j in ends:
        seg_start = max(0, j - hi)
        seg = t[seg_start:j]
        dist = _suffix_distances(q, seg)
        for length in range(lo, min(hi, len(seg)) + 1):
            score = 1.0 - dist[length] / max(m, length)
            if score > best_score:
                best_score = score
                best_span = (j - length, j)
    return best_score, best_span


def _fragment_chain(
    fragments: Sequence[str], doc_text: str, max_gap: int
) -> list[tuple[int, int]] | None:
    """Ordered occurrence chain: strictly increasing starts, bounded gaps.

    Occurrence lists are small, so feasibility is resolved by dynamic
    programming over them (greedy leftmost can miss chains under a gap cap).
    """
    occurrences: list[list[tuple[int, int]]] = []
    for frag in fragments:
        spans = [(m.start(), m.start() + len(frag)) for m in re.finditer(re.escape(frag), doc_text)]
        if not spans:
            return None
        occurrences.append(spans)

    # back[k][i] = index of a feasible predecessor occurrence, or -2 if none.
    back: list[list[int]] = [[-1] * len(occurrences[0])]
    for k in range(1, len(occurrences)):
        row: list[int] = []
        for start, _end in occurrences[k]:
            pred = -2
            for p, (p_start, p_end) in enumerate(occurrences[k - 1]):
                if back[k - 1][p] == -2:
                    continue
                if p_start < start and start - p_end <= max_gap:
                    pred = p
                    break
            row.append(pred)
        if all(v == -2 for v in row):
            return None
        back.append(row)

    # Reconstruct one feasible chain from the last fragment backwards.
    last = next(i for i, v in enumerate(back[-1]) if v != -2)
    chain = [occurrences[-1][last]]
    cursor = last
    for k in range(len(occurrences) - 1, 0, -1):
        cursor = back[k][cursor]
        chain.append(occurrences[k - 1][cursor])
    chain.reverse()
    return chain


def classify_quote(
    quote: str,
    corpus: Corpus | CorpusIndex,
    cfg: AuditConfig | None = None,
    code_ref: str = "",
) -> QuoteAuditRecord:
    """Classify one quote against the corpus.

    Cascade: contiguous normalized substring -> verbatim; ordered in-document
    ellipsis fragments -> modified_ellipsis; windowed edit similarity above
    threshold -> modified_edit; otherwise fabricated. Fragments matching in
    different documents never combine (splicing misattributes speakers).
    """
    cfg = cfg or AuditConfig()
    if not quote or not quote.strip():
        raise ValueError("quote must be non-empty")
    index = corpus if isinstance(corpus, CorpusIndex) else CorpusIndex(corpus)

    q_norm = normalize(quote).text.strip(" ")

    for doc, norm in index.normalized:
        pos = norm.text.find(q_norm)
        if pos >= 0:
            span = norm.to_original(pos, pos + len(q_norm))
            return QuoteAuditRecord(
                code_ref=code_ref,
                quote=quote,
                verdict=Verdict.VERBATIM,
                matched_doc=doc.id,
                evidence=Evidence(spans=(span,)),
            )

    fragments = tuple(f.strip(" ") for f in q_norm.split(ELLIPSIS))
    fragments = tuple(f for f in fragments if f)
    if len(fragments) >= 2:
        for doc, norm in index.normalized:
            chain = _fragment_chain(fragments, norm.text, cfg.max_gap_chars)
            if chain is not None:
                spans = tuple(norm.to_original(s, e) for s, e in chain)
                return QuoteAuditRecord(
                    code_ref=code_ref,
                    quote=quote,
                    verdict=Verdict.MODIFIED_ELLIPSIS,
                    matched_doc=doc.id,
                    evidence=Evidence(spans=spans, fragments=fragments),
                )

    best_score = 0.0
    best_doc: Document | None = None
    best_span: tuple[int, int] | None = None
    best_norm: NormalizedText | None = None
    for doc, norm in index.normalized:
        score, span = best_window_similarity(q_norm, norm.text, cfg)
        if score > best_score:
            best_score, best_doc, best_span, best_norm = score, doc, span, norm

    if best_score >= cfg.edit_threshold and best_doc is not None and best_span is not None:
        span = best_norm.to_original(*best_span)  # type: ignore[union-attr]
        return QuoteAuditRecord(
            code_ref=code_ref,
            quote=quote,
            verdict=Verdict.MODIFIED_EDIT,
            matched_doc=best_doc.id,
            evidence=Evidence(spans=(span,), score=best_score),
        )
    return QuoteAuditRecord(
        code_ref=code_ref,
        quote=quote,
        verdict=Verdict.FABRICATED,
        matched_doc=None,
        evidence=Evidence(score=best_score),
    )


def audit_codeset(
    codes: Sequence,
    corpus: Corpus,
    sample: int | None = None,
    seed: int = 0,
    cfg: AuditConfig | None = None,
) -> tuple[list[QuoteAuditRecord], AuditSummary]:
    """Audit every quote carried by the given codes, or a seeded sample of codes.

    Accepts initial codes (one quote each) and unique codes (quote lists);
    the seed makes any sampled audit reproducible.
    """
    cfg = cfg or AuditConfig()
    items = list(codes)
    if sample is not None:
        if sample > len(items):
            raise ValueError(f"sample {sample} exceeds {len(items)} codes")
        items = random.Random(seed).sample(items, sample)

    index = CorpusIndex(corpus)
    records: list[QuoteAuditRecord] = []
    for code in items:
        for ref, quote in _quotes_of(code):
            records.append(classify_quote(quote, index, cfg, code_ref=ref))
    return records, AuditSummary.from_records(records)


def _quotes_of(code) -> Iterable[tuple[str, str]]:
    if hasattr(code, "quotes"):  # unique code: list of (quote, source_doc)
        uid = getattr(code, "uid", "")
        for quote, _source in code.quotes:
            yield uid, quote
    else:  # initial code
        yield getattr(code, "ref", ""), code.quote


def _match_tokens(text: str) -> list[str]:
    tokens = []
    for raw in normalize(text).text.lower().split():
        token = raw.strip(string.punctuation)
        if token:
            tokens.append(token)
    return tokens


def match_published_quotes(
    system_quotes: Sequence[str],
    external_quotes: Sequence[str],
    cfg: AuditConfig | None = None,
) -> list[tuple[tuple[int, int], float]]:
    """Rank candidate pairings of system quotes against an external quote list.

    Similarity is shared-token-multiset overlap over the smaller quote's token
    count; external quotes under three tokens are excluded. Results at or
    above the match threshold come back ranked for manual confirmation.
    """
    cfg = cfg or AuditConfig()
    sys_tokens = [Counter(_match_tokens(q)) for q in system_quotes]
    results: list[tuple[tuple[int, int], float]] = []
    for j, ext in enumerate(external_quotes):
        ext_counter = Counter(_match_tokens(ext))
        if sum(ext_counter.values()) < 3:
            continue
        for i, sys_counter in enumerate(sys_tokens):
            smaller = min(sum(sys_counter.values()), sum(ext_counter.values()))
            if smaller == 0:
                continue
            shared = sum((sys_counter & ext_counter).values())
            score = shared / smaller
            if score >= cfg.match_threshold:
                results.append(((i, j), score))
    results.sort(key=lambda item: (-item[1], item[0]))
    return results
