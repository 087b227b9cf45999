"""Theme induction over unique codes, with an optional two-level hierarchy."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Sequence

from . import prompts
from .gateway import ChatRequest, Gateway, GenerationParams, request_json
from .saturation import UniqueCode

log = logging.getLogger(__name__)


@dataclass
class Theme:
    id: str
    name: str
    description: str
    code_indices: list[int]

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "description": self.description,
            "code_indices": list(self.code_indices),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Theme":
        return cls(
            id=data["id"],
            name=data["name"],
            description=data["description"],
            code_indices=list(data["code_indices"]),
        )


@dataclass
class ThemeSet:
    themes: list[Theme]
    unassigned: list[int]
    params_used: GenerationParams | None = None
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "themes": [t.to_dict() for t in self.themes],
            "unassigned": list(self.unassigned),
            "params_used": self.params_used.to_dict() if self.params_used else None,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ThemeSet":
        params = data.get("params_used")
        return cls(
            themes=[Theme.from_dict(t) for t in data["themes"]],
            unassigned=list(data["unassigned"]),
            params_used=GenerationParams.from_dict(params) if params else None,
            warnings=list(data.get("warnings", [])),
        )


@dataclass
class ParentTheme:
    name: str
    description: str
    subtheme_indices: list[int]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "subtheme_indices": list(self.subtheme_indices),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ParentTheme":
        return cls(
            name=data["name"],
            description=data["description"],
            subtheme_indices=list(data["subtheme_indices"]),
        )


@dataclass
class ThemeHierarchy:
    subthemes: list[Theme]
    parents: list[ParentTheme]
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "subthemes": [t.to_dict() for t in self.subthemes],
            "parents": [p.to_dict() for p in self.parents],
            "flags": list(self.flags),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ThemeHierarchy":
        return cls(
            subthemes=[Theme.from_dict(t) for t in data["subthemes"]],
            parents=[ParentTheme.from_dict(p) for p in data["parents"]],
            flags=list(data.get("flags", [])),
        )


@dataclass(frozen=True)
class AssignmentReport:
    unassigned: list[int]
    out_of_range: list[int]
    per_theme_sizes: dict[str, int]
    overlap_count: int
    distinct_assigned: int

    def to_dict(self) -> dict:
        return {
            "unassigned": list(self.unassigned),
            "out_of_range": list(self.out_of_range),
            "per_theme_sizes": dict(self.per_theme_sizes),
            "overlap_count": self.overlap_count,
            "distinct_assigned": self.distinct_assigned,
        }


def _codes_listing(codes: Sequence[UniqueCode]) -> str:
    return json.dumps(
        [
            {"index": i, "code_name": c.code_name, "description": c.description}
            for i, c in enumerate(codes)
        ],
        indent=2,
        ensure_ascii=False,
    )


def _parse_theme_entries(
    payload, n_codes: int, key: str, warnings: list[str]
) -> list[tuple[str, str, list[int]]]:
    if not isinstance(payload, dict) or not isinstance(payload.get("themes"), list):
        raise ValueError("expected an object with a 'themes' array")
    entries: list[tuple[str, str, list[int]]] = []
    for item in payload["themes"]:
        if not isinstance(item, dict):
            warnings.append("dropped non-object theme entry")
            continue
        name = str(item.get("name", "")).strip()
        description = str(item.get("description", "")).strip()
        indices: list[int] = []
        seen: set[int] = set()
        for value in item.get(key, []) or []:
            try:
                idx = int(value)
            except (TypeError, ValueError):
                warnings.append(f"theme {name!r}: dropped non-integer index {value!r}")
                continue
            if not 0 <= idx < n_codes:
                warnings.append(f"theme {name!r}: dropped out-of-range index {idx}")
                continue
            if idx in seen:
                warnings.append(f"theme {name!r}: dropped duplicate index {idx}")
                continue
            seen.add(idx)
            indices.append(idx)
        entries.append((name, description, indices))
    return entries


def generate_themes(
    gateway: Gateway,
    codes: Sequence[UniqueCode],
    research_question: str,
    params: GenerationParams,
    n_themes: int | None = None,
    template: str | None = None,
    mode: str | None = None,
    id_prefix: str = "T",
    strict_assign: bool = False,
) -> ThemeSet:
    """Group unique codes into themes via one prompt over (name, description) pairs.

    Codes left out of every theme land in `unassigned`; shared codes across
    themes are permitted. With strict_assign, one corrective re-prompt asks
    the model to place the leftovers before they are accepted as unassigned.
    """
    if not codes:
        raise ValueError("codes must be non-empty")
    template = template or prompts.load_template("themes")
    count_instruction = (
        f"\nSort and group the codes into exactly {n_themes} themes.\n" if n_themes else ""
    )
    rendered = prompts.render(
        template,
        theme_count_instruction=count_instruction,
        research_question=research_question,
        list_of_unique_codes=_codes_listing(codes),
    )
    payload, _ = request_json(gateway, ChatRequest(params=params, user_text=rendered), mode)

    warnings: list[str] = []
    entries = _parse_theme_entries(payload, len(codes), "code_indices", warnings)
    themes = [
        Theme(id=f"{id_prefix}{k + 1}", name=name, description=desc, code_indices=indices)
        for k, (name, desc, indices) in enumerate(entries)
    ]
    assigned = {i for t in themes for i in t.code_indices}
    unassigned = sorted(set(range(len(codes))) - assigned)

    if unassigned and strict_assign:
        themes, unassigned, extra = _reassign_remainder(
            gateway, codes, themes, unassigned, params, mode, id_prefix
        )
        warnings.extend(extra)

    return ThemeSet(themes=themes, unassigned=unassigned, params_used=params, warnings=warnings)


def _reassign_remainder(
    gateway: Gateway,
    codes: Sequence[UniqueCode],
    themes: list[Theme],
    unassigned: list[int],
    params: GenerationParams,
    mode: str | None,
    id_prefix: str,
) -> tuple[list[Theme], list[int], list[str]]:
    warnings: list[str] = []
    template = prompts.load_template("assign_remainder")
    rendered = prompts.render(
        template,
        unassigned_codes=json.dumps(
            [
                {"index": i, "code_name": codes[i].code_name, "description": codes[i].description}
                for i in unassigned
            ],
            indent=2,
            ensure_ascii=False,
        ),
        existing_themes=json.dumps(
            [{"name": t.name, "description": t.description} for t in themes],
            indent=2,
            ensure_ascii=False,
        ),
    )
    try:
        payload, _ = request_json(gateway, ChatRequest(params=params, user_text=rendered), mode)
        entries = _parse_theme_entries(payload, len(codes), "code_indices", warnings)
    except Exception as exc:  # noqa: BLE001 - corrective pass is best-effort
        log.warning("strict-assign re-prompt failed: %s", exc)
        warnings.append(f"strict-assign re-prompt failed: {exc}")
        return themes, unassigned, warnings

    by_name = {t.name: t for t in themes}
    for name, desc, indices in entries:
        target = by_name.get(name)
        if target is None:
            target = Theme(
                id=f"{id_prefix}{len(themes) + 1}", name=name, description=desc, code_indices=[]
            )
            themes.append(target)
            by_name[name] = target
        for idx in indices:
            if idx not in target.code_indices:
                target.code_indices.append(idx)
    assigned = {i for t in themes for i in t.code_indices}
    remaining = sorted(set(range(len(codes))) - assigned)
    if remaining:
        warnings.append(f"codes still unassigned after corrective pass: {remaining}")
    return themes, remaining, warnings


def validate_hierarchy(subthemes: Sequence[Theme], parents: Sequence[ParentTheme]) -> list[str]:
    """Flag every sub-theme whose parent count differs from one."""
    counts = {i: 0 for i in range(len(subthemes))}
    for parent in parents:
        for idx in parent.subtheme_indices:
            if idx in counts:
                counts[idx] += 1
    flags: list[str] = []
    for idx in sorted(counts):
        if counts[idx] > 1:
            flags.append(f"duplicate sub-theme {idx}")
        elif counts[idx] == 0:
            flags.append(f"unassigned sub-theme {idx}")
    return flags


def generate_hierarchy(
    gateway: Gateway,
    codes: Sequence[UniqueCode],
    research_question: str,
    n_sub: int,
    n_top: int,
    params: GenerationParams,
    mode: str | None = None,
    themes_template: str | None = None,
    subthemes_template: str | None = None,
) -> tuple[ThemeHierarchy, list[str]]:
    """Two-pass hierarchy: a fixed number of sub-themes, then parent grouping.

    Violations of the one-parent rule are flagged in the validation report,
    never silently repaired.
    """
    if n_sub <= 0 or n_top <= 0:
        raise ValueError("n_sub and n_top must be positive")
    sub_set = generate_themes(
        gateway,
        codes,
        research_question,
        params,
        n_themes=n_sub,
        template=themes_template,
        mode=mode,
        id_prefix="S",
    )

    template = subthemes_template or prompts.load_template("subthemes")
    listing = json.dumps(
        [
            {"index": i, "name": t.name, "description": t.description}
            for i, t in enumerate(sub_set.themes)
        ],
        indent=2,
        ensure_ascii=False,
    )
    rendered = prompts.render(
        template,
        n_top=str(n_top),
        research_question=research_question,
        list_of_subthemes=listing,
    )
    payload, _ = request_json(gateway, ChatRequest(params=params, user_text=rendered), mode)

    warnings = list(sub_set.warnings)
    entries = _parse_theme_entries(payload, len(sub_set.themes), "subtheme_indices", warnings)
    parents = [
        ParentTheme(name=name, description=desc, subtheme_indices=indices)
        for name, desc, indices in entries
    ]
    hierarchy = ThemeHierarchy(
        subthemes=sub_set.themes,
        parents=parents,
        flags=validate_hierarchy(sub_set.themes, parents),
    )
    return hierarchy, warnings


def validate_assignment(themeset: ThemeSet, n_codes: int) -> AssignmentReport:
    """Coverage accounting for a theme set over n_codes unique codes."""
    seen: dict[int, int] = {}
    out_of_range: list[int] = []
    sizes: dict[str, int] = {}
    for theme in themeset.themes:
        sizes[theme.id] = len(theme.code_indices)
        for idx in theme.code_indices:
            if not 0 <= idx < n_codes:
                out_of_range.append(idx)
                continue
            seen[idx] = seen.get(idx, 0) + 1
    overlap = sum(1 for count in seen.values() if count > 1)
    return AssignmentReport(
        unassigned=sorted(set(themeset.unassigned)),
        out_of_range=sorted(set(out_of_range)),
        per_theme_sizes=sizes,
        overlap_count=overlap,
        distinct_assigned=len(seen),
    )
