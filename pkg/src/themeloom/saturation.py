"""Duplicate-code reduction via a pairwise tournament, with merge lineage.

Per-document code lists are first self-deduplicated, then merged pairwise in
corpus order, round by round, until a single list of unique codes remains.
Every comparison the tournament consumes is logged as a MergeDecision; every
quote survives merging (quote conservation).
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Protocol, Sequence

from . import prompts
from .coding import CodeSet, InitialCode
from .gateway import ChatRequest, Gateway, GenerationParams, MalformedOutputError, request_json

log = logging.getLogger(__name__)

DEFAULT_BATCH_SIZE = 20


@dataclass
class UniqueCode:
    """A merged code: lineage members and their quotes stay index-aligned."""

    code_name: str
    description: str
    quotes: list[tuple[str, str]]  # (quote, source_doc), parallel to members
    members: list[str]  # initial-code refs, "doc:index"
    merge_rationales: list[str] = field(default_factory=list)

    @property
    def uid(self) -> str:
        return self.members[0]

    @classmethod
    def from_initial(cls, code: InitialCode) -> "UniqueCode":
        return cls(
            code_name=code.code_name,
            description=code.description,
            quotes=[(code.quote, code.source_doc)],
            members=[code.ref],
        )

    def clone(self) -> "UniqueCode":
        return UniqueCode(
            code_name=self.code_name,
            description=self.description,
            quotes=list(self.quotes),
            members=list(self.members),
            merge_rationales=list(self.merge_rationales),
        )

    def to_dict(self) -> dict:
        return {
            "uid": self.uid,
            "code_name": self.code_name,
            "description": self.description,
            "quotes": [{"quote": q, "source_doc": s} for q, s in self.quotes],
            "members": list(self.members),
            "merge_rationales": list(self.merge_rationales),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "UniqueCode":
        return cls(
            code_name=data["code_name"],
            description=data["description"],
            quotes=[(q["quote"], q["source_doc"]) for q in data["quotes"]],
            members=list(data["members"]),
            merge_rationales=list(data.get("merge_rationales", [])),
        )


@dataclass
class MergeDecision:
    """One consumed comparison: did `target` merge into `matched`?

    Round 0 marks the within-list self-deduplication pass that precedes the
    pairing rounds.
    """

    id: int
    target: str
    matched: str
    verdict: bool
    round: int
    rationale: str | None = None
    params_used: GenerationParams | None = None
    review: str | None = None  # accepted | rejected, set by human review

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "target": self.target,
            "matched": self.matched,
            "verdict": self.verdict,
            "round": self.round,
            "rationale": self.rationale,
            "params_used": self.params_used.to_dict() if self.params_used else None,
            "review": self.review,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MergeDecision":
        params = data.get("params_used")
        return cls(
            id=data["id"],
            target=data["target"],
            matched=data["matched"],
            verdict=data["verdict"],
            round=data["round"],
            rationale=data.get("rationale"),
            params_used=GenerationParams.from_dict(params) if params else None,
            review=data.get("review"),
        )


@dataclass(frozen=True)
class SaturationReport:
    total_codes: int
    unique_codes: int
    ratio: float
    rounds: int
    per_round_sizes: list[int]

    def to_dict(self) -> dict:
        return {
            "total_codes": self.total_codes,
            "unique_codes": self.unique_codes,
            "ratio": self.ratio,
            "rounds": self.rounds,
            "per_round_sizes": list(self.per_round_sizes),
        }


def saturation_ratio(total: int, unique: int) -> float:
    """Unique codes over total codes; a descriptive measure of repetition."""
    if not 0 < unique <= total:
        raise ValueError(f"need 0 < unique <= total, got unique={unique}, total={total}")
    return unique / total


class DuplicateOracle(Protocol):
    """Judge deciding whether a target code duplicates each candidate."""

    kind: str
    params: GenerationParams | None

    def compare(self, target: UniqueCode, candidates: Sequence[UniqueCode]) -> dict[str, bool]:
        """Return candidate uid -> verdict."""
        ...


class StringEqualityOracle:
    """Pure, deterministic judge: duplicate iff the names match."""

    kind = "string_equality"
    params: GenerationParams | None = None

    @staticmethod
    def canon(name: str) -> str:
        return name.strip().casefold()

    def compare(self, target: UniqueCode, candidates: Sequence[UniqueCode]) -> dict[str, bool]:
        key = self.canon(target.code_name)
        return {c.uid: self.canon(c.code_name) == key for c in candidates}


class RecordedOracle:
    """Replays verdicts from a recorded (target uid, candidate uid) plan."""

    kind = "recorded"
    params: GenerationParams | None = None

    def __init__(self, verdicts: Mapping[tuple[str, str], bool]):
        self.verdicts = dict(verdicts)

    def compare(self, target: UniqueCode, candidates: Sequence[UniqueCode]) -> dict[str, bool]:
        return {c.uid: self.verdicts.get((target.uid, c.uid), False) for c in candidates}


class LlmOracle:
    """Judges duplicates with the comparison prompt, in batches.

    A batch whose verdict JSON stays malformed after the repair retry comes
    back all-false: when in doubt, keep codes separate.
    """

    kind = "llm"

    def __init__(
        self,
        gateway: Gateway,
        params: GenerationParams,
        template: str | None = None,
        mode: str | None = None,
        batch_size: int = DEFAULT_BATCH_SIZE,
    ):
        self.gateway = gateway
        self.params = params
        self.template = template or prompts.load_template("duplicates")
        self.mode = mode
        self.batch_size = batch_size

    def compare(self, target: UniqueCode, candidates: Sequence[UniqueCode]) -> dict[str, bool]:
        verdicts: dict[str, bool] = {}
        for start in range(0, len(candidates), self.batch_size):
            batch = candidates[start : start + self.batch_size]
            verdicts.update(self._compare_batch(target, batch))
        return verdicts

    def _compare_batch(self, target: UniqueCode, batch: Sequence[UniqueCode]) -> dict[str, bool]:
        # Short positional ids keep the model's reply format independent of
        # whatever characters appear in code refs.
        ids = [f"code_{i}" for i in range(len(batch))]
        target_json = json.dumps(
            {"code": target.code_name, "description": target.description},
            indent=2,
            ensure_ascii=False,
        )
        candidates_json = json.dumps(
            [
                {"id": cid, "code": c.code_name, "description": c.description}
                for cid, c in zip(ids, batch)
            ],
            indent=2,
            ensure_ascii=False,
        )
        rendered = prompts.render(
            self.template, target_code=target_json, comparison_codes=candidates_json
        )
        request = ChatRequest(params=self.params, user_text=rendered)
        try:
            payload, _ = request_json(self.gateway, request, self.mode)
            raw = payload.get("comparisons", {}) if isinstance(payload, dict) else {}
        except MalformedOutputError as exc:
            log.warning("duplicate-comparison batch failed, keeping codes separate: %s", exc)
            raw = {}
        out: dict[str, bool] = {}
        for cid, code in zip(ids, batch):
            value = raw.get(cid, False)
            if isinstance(value, str):
                value = value.strip().lower() == "true"
            out[code.uid] = bool(value)
        return out


def compare_codes(
    target: UniqueCode, candidates: Sequence[UniqueCode], oracle: DuplicateOracle
) -> dict[str, bool]:
    """One boolean per candidate, keyed by candidate uid."""
    if not candidates:
        raise ValueError("candidates must be non-empty")
    return oracle.compare(target, candidates)


RationaleFn = Callable[[UniqueCode, UniqueCode], str]


def make_llm_rationale_fn(
    gateway: Gateway,
    params: GenerationParams,
    template: str | None = None,
    mode: str | None = None,
) -> RationaleFn:
    """Follow-up request asking for a brief account of why two codes merged."""
    template = template or prompts.load_template("merge_rationale")

    def ask(absorber: UniqueCode, incoming: UniqueCode) -> str:
        rendered = prompts.render(
            template,
            code_a=json.dumps(
                {"code": absorber.code_name, "description": absorber.description},
                indent=2,
                ensure_ascii=False,
            ),
            code_b=json.dumps(
                {"code": incoming.code_name, "description": incoming.description},
                indent=2,
                ensure_ascii=False,
            ),
        )
        try:
            payload, _ = request_json(gateway, ChatRequest(params=params, user_text=rendered), mode)
            if isinstance(payload, dict) and isinstance(payload.get("rationale"), str):
                return payload["rationale"]
        except MalformedOutputError as exc:
            log.warning("rationale request failed: %s", exc)
        return ""

    return ask


def merge_lists(
    a: Sequence[UniqueCode],
    b: Sequence[UniqueCode],
    oracle: DuplicateOracle,
    round_no: int = 1,
    rationale_fn: RationaleFn | None = None,
    id_start: int = 0,
) -> tuple[list[UniqueCode], list[MergeDecision]]:
    """Fold list b into list a.

    Each incoming code either merges into the first matching code of the
    running result (appending quotes, members, rationales) or is appended as
    new. Comparison stops at the first match, so every true decision in the
    log is the one the merge applied.
    """
    result = [code.clone() for code in a]
    decisions: list[MergeDecision] = []
    next_id = id_start
    for incoming in b:
        incoming = incoming.clone()
        merged = False
        if result:
            try:
                verdicts = compare_codes(incoming, result, oracle)
            except MalformedOutputError:
                verdicts = {}
            for candidate in result:
                verdict = bool(verdicts.get(candidate.uid, False))
                decision = MergeDecision(
                    id=next_id,
                    target=incoming.uid,
                    matched=candidate.uid,
                    verdict=verdict,
                    round=round_no,
                    params_used=oracle.params,
                )
                decisions.append(decision)
                next_id += 1
                if verdict:
                    rationale = rationale_fn(candidate, incoming) if rationale_fn else None
                    candidate.quotes.extend(incoming.quotes)
                    candidate.members.extend(incoming.members)
                    candidate.merge_rationales.extend(incoming.merge_rationales)
                    if rationale:
                        candidate.merge_rationales.append(rationale)
                        decision.rationale = rationale
                    merged = True
                    break
        if not merged:
            result.append(incoming)
    return result, decisions


def run_tournament(
    codesets: Sequence[CodeSet],
    oracle: DuplicateOracle,
    rationale_fn: RationaleFn | None = None,
) -> tuple[list[UniqueCode], SaturationReport, list[MergeDecision]]:
    """Reduce per-document code lists to one list of unique codes.

    Lists pair up in corpus order; an odd list carries over unchanged; rounds
    repeat until one list remains (ceil(log2 n) rounds for n lists). Each list
    is self-deduplicated before round 1 because duplicates occur within a
    single interview as well as across interviews.
    """
    if not codesets:
        raise ValueError("at least one CodeSet is required")
    total_codes = sum(len(cs.codes) for cs in codesets)
    if total_codes == 0:
        raise ValueError("no codes to deduplicate")

    decisions: list[MergeDecision] = []
    lists: list[list[UniqueCode]] = []
    for cs in codesets:
        singletons = [UniqueCode.from_initial(c) for c in cs.codes]
        deduped, dec = merge_lists(
            [], singletons, oracle, round_no=0, rationale_fn=rationale_fn, id_start=len(decisions)
        )
        decisions.extend(dec)
        lists.append(deduped)

    rounds = 0
    per_round_sizes = [sum(len(lst) for lst in lists)]
    while len(lists) > 1:
        rounds += 1
        merged_lists: list[list[UniqueCode]] = []
        for i in range(0, len(lists) - 1, 2):
            merged, dec = merge_lists(
                lists[i],
                lists[i + 1],
                oracle,
                round_no=rounds,
                rationale_fn=rationale_fn,
                id_start=len(decisions),
            )
            decisions.extend(dec)
            merged_lists.append(merged)
        if len(lists) % 2:
            merged_lists.append(lists[-1])
        lists = merged_lists
        per_round_sizes.append(sum(len(lst) for lst in lists))

    unique = lists[0]
    report = SaturationReport(
        total_codes=total_codes,
        unique_codes=len(unique),
        ratio=saturation_ratio(total_codes, len(unique)),
        rounds=rounds,
        per_round_sizes=per_round_sizes,
    )
    assert rounds == expected_rounds(len(codesets))
    return unique, report, decisions


def expected_rounds(n_lists: int) -> int:
    return 0 if n_lists <= 1 else math.ceil(math.log2(n_lists))
