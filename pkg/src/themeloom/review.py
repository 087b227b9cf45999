"""Human review actions over stage artifacts.

Pure artifact-to-artifact transformations; the HTTP server persists the
results, appends trail events and flags downstream stages stale.
"""

from __future__ import annotations

from dataclasses import dataclass

from .coding import CodeSet
from .saturation import MergeDecision, UniqueCode


class ReviewError(Exception):
    pass


@dataclass
class MergeRejection:
    kept: UniqueCode
    split_off: UniqueCode
    decision_id: int


def _subtree_uids(root: str, decisions: list[MergeDecision], skip_id: int) -> set[str]:
    """All code uids that folded into `root`, transitively.

    Each applied (true) decision records `target` merged into `matched`; the
    subtree of a code is itself plus the subtrees of everything that merged
    into it.
    """
    children: dict[str, list[str]] = {}
    for d in decisions:
        if d.verdict and d.id != skip_id and d.review != "rejected":
            children.setdefault(d.matched, []).append(d.target)
    out: set[str] = set()
    frontier = [root]
    while frontier:
        uid = frontier.pop()
        if uid in out:
            continue
        out.add(uid)
        frontier.extend(children.get(uid, []))
    return out


def _rationales_for(members: set[str], decisions: list[MergeDecision]) -> list[str]:
    return [
        d.rationale
        for d in decisions
        if d.verdict
        and d.rationale
        and d.review != "rejected"
        and d.target in members
        and d.matched in members
    ]


def reject_merge(
    decision_id: int,
    decisions: list[MergeDecision],
    unique_codes: list[UniqueCode],
    codesets: list[CodeSet],
) -> MergeRejection:
    """Undo one applied merge: the rejected side becomes its own unique code.

    The split-off code carries every member (and quote) that had merged into
    the rejected side, and reclaims its original name and description.
    """
    by_id = {d.id: d for d in decisions}
    decision = by_id.get(decision_id)
    if decision is None:
        raise ReviewError(f"no merge decision with id {decision_id}")
    if not decision.verdict:
        raise ReviewError(f"decision {decision_id} is not an applied merge")
    if decision.review == "rejected":
        raise ReviewError(f"decision {decision_id} was already rejected")

    host = next((u for u in unique_codes if decision.target in u.members), None)
    if host is None:
        raise ReviewError(f"no unique code currently holds {decision.target!r}")

    split_uids = _subtree_uids(decision.target, decisions, skip_id=decision.id)
    keep_pairs = [(m, q) for m, q in zip(host.members, host.quotes) if m not in split_uids]
    split_pairs = [(m, q) for m, q in zip(host.members, host.quotes) if m in split_uids]
    if not keep_pairs or not split_pairs:
        raise ReviewError(f"decision {decision_id} does not split {host.uid!r}")

    initial = {c.ref: c for cs in codesets for c in cs.codes}
    root = initial.get(decision.target)
    if root is None:
        raise ReviewError(f"initial code {decision.target!r} not found in codesets")

    kept_members = {m for m, _ in keep_pairs}
    split_members = {m for m, _ in split_pairs}
    kept = UniqueCode(
        code_name=host.code_name,
        description=host.description,
        quotes=[q for _, q in keep_pairs],
        members=[m for m, _ in keep_pairs],
        merge_rationales=_rationales_for(kept_members, decisions),
    )
    split_off = UniqueCode(
        code_name=root.code_name,
        description=root.description,
        quotes=[q for _, q in split_pairs],
        members=[m for m, _ in split_pairs],
        merge_rationales=_rationales_for(split_members, decisions),
    )
    decision.review = "rejected"
    return MergeRejection(kept=kept, split_off=split_off, decision_id=decision_id)


def apply_rejection(unique_codes: list[UniqueCode], rejection: MergeRejection) -> list[UniqueCode]:
    """Replace the host in place and append the split-off code at the end.

    Appending keeps existing unique-code indices stable for any (now stale)
    theme assignments.
    """
    out: list[UniqueCode] = []
    for code in unique_codes:
        if rejection.kept.members and rejection.kept.members[0] in code.members:
            out.append(rejection.kept)
        else:
            out.append(code)
    out.append(rejection.split_off)
    return out
