"""Reportable artifacts: COREQ mapping, coding tree, theme and audit tables.

Every number in a rendered table is recomputed from the stage artifacts at
render time; nothing aggregates ahead of rendering.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Mapping, Sequence

from .audit import AuditSummary, QuoteAuditRecord
from .saturation import SaturationReport, UniqueCode
from .theming import ThemeHierarchy, ThemeSet

FORMATS = ("markdown", "csv", "json")

COREQ_TOPICS = (
    (24, "Number of data coders"),
    (25, "Description of the coding tree"),
    (26, "Derivation of themes"),
    (27, "Software"),
    (28, "Participant checking"),
    (29, "Quotations presented"),
    (30, "Data and findings consistent"),
    (31, "Clarity of major themes"),
    (32, "Clarity of minor themes"),
)


class ReportingError(Exception):
    pass


@dataclass(frozen=True)
class CoreqReport:
    """Analysis-and-reporting checklist items 24 through 32, in order."""

    items: tuple[tuple[int, str, str], ...]

    def __post_init__(self) -> None:
        numbers = [n for n, _, _ in self.items]
        if numbers != [n for n, _ in COREQ_TOPICS]:
            raise ValueError("report must cover exactly items 24..32 in order")
        if any(not reflection for _, _, reflection in self.items):
            raise ValueError("every reflection must be non-empty")

    def get(self, number: int) -> str:
        for n, _, reflection in self.items:
            if n == number:
                return reflection
        raise KeyError(number)

    def to_dict(self) -> dict:
        return {
            "items": [
                {"item": n, "topic": topic, "reflection": reflection}
                for n, topic, reflection in self.items
            ]
        }


def build_coreq(
    model_id: str,
    themes: ThemeSet | None,
    hierarchy: ThemeHierarchy | None = None,
    audit_summary: AuditSummary | None = None,
    review_edit_count: int = 0,
    participant_checking: str = "Not applicable (secondary data analysis)",
    overrides: Mapping[int, str] | None = None,
    coding_tree_ref: str = "report/coding_tree.md",
) -> CoreqReport:
    """Auto-fill the checklist from pipeline artifacts, honoring user overrides."""
    if themes is None and hierarchy is None:
        raise ReportingError("stage 'themes' not done: theming output is required")

    coders = "1 hybrid artificial system"
    if review_edit_count:
        coders += f" plus human review ({review_edit_count} accepted edits)"

    if audit_summary is not None and audit_summary.sample_size:
        counts = audit_summary.counts
        quotations = (
            f"Yes: {audit_summary.sample_size} quotes audited "
            f"({counts['verbatim']} verbatim, {counts['modified']} modified, "
            f"{counts['fabricated']} fabricated)"
        )
    else:
        quotations = "not audited"

    if themes is not None:
        majors = f"{len(themes.themes)} themes presented with full descriptions"
    else:
        majors = f"{len(hierarchy.parents)} higher-level themes presented"  # type: ignore[union-attr]
    if hierarchy is not None:
        minors = f"{len(hierarchy.subthemes)} sub-themes presented under higher-level themes"
    else:
        minors = "no sub-theme articulation generated for this run"

    auto = {
        24: coders,
        25: f"Provided (see {coding_tree_ref})",
        26: "Inductive",
        27: f"{model_id}, via API",
        28: participant_checking,
        29: quotations,
        30: "Theme tables and coding tree exported; consistency review is a human step",
        31: majors,
        32: minors,
    }
    overrides = dict(overrides or {})
    items = tuple(
        (number, topic, overrides.get(number, auto[number])) for number, topic in COREQ_TOPICS
    )
    return CoreqReport(items=items)


def render_coreq_markdown(report: CoreqReport) -> str:
    lines = [
        "# COREQ mapping (items 24-32)",
        "",
        "Only the analysis-and-reporting domain is mapped; other checklist",
        "domains are out of scope for this tool.",
        "",
        "| Item | Topic | Reflection |",
        "| --- | --- | --- |",
    ]
    for number, topic, reflection in report.items:
        lines.append(f"| {number} | {topic} | {_cell(reflection)} |")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class TreeLeaf:
    quote: str
    source_doc: str
    verdict: str | None = None


@dataclass(frozen=True)
class TreeCode:
    ref: str
    name: str
    leaves: tuple[TreeLeaf, ...]


@dataclass(frozen=True)
class TreeTheme:
    id: str
    name: str
    codes: tuple[TreeCode, ...]


@dataclass(frozen=True)
class CodingTree:
    themes: tuple[TreeTheme, ...]

    def leaf_count(self) -> int:
        return sum(len(code.leaves) for theme in self.themes for code in theme.codes)

    def to_dict(self) -> dict:
        return {
            "themes": [
                {
                    "id": t.id,
                    "name": t.name,
                    "codes": [
                        {
                            "ref": c.ref,
                            "name": c.name,
                            "quotes": [
                                {
                                    "quote": leaf.quote,
                                    "source_doc": leaf.source_doc,
                                    "verdict": leaf.verdict,
                                }
                                for leaf in c.leaves
                            ],
                        }
                        for c in t.codes
                    ],
                }
                for t in self.themes
            ]
        }


def export_coding_tree(
    themeset: ThemeSet,
    unique_codes: Sequence[UniqueCode],
    audit_records: Sequence[QuoteAuditRecord] | None = None,
) -> CodingTree:
    """Theme -> codes -> (quote, source) tree in deterministic order.

    Leaves carry their audit verdict once the audit stage has run.
    """
    verdicts: dict[tuple[str, str], str] = {}
    for record in audit_records or ():
        verdicts[(record.code_ref, record.quote)] = record.verdict.value

    themes: list[TreeTheme] = []
    for theme in themeset.themes:
        codes: list[TreeCode] = []
        for idx in theme.code_indices:
            if not 0 <= idx < len(unique_codes):
                continue
            code = unique_codes[idx]
            leaves = tuple(
                TreeLeaf(
                    quote=quote,
                    source_doc=source,
                    verdict=verdicts.get((code.uid, quote)),
                )
                for quote, source in code.quotes
            )
            codes.append(TreeCode(ref=code.uid, name=code.code_name, leaves=leaves))
        themes.append(TreeTheme(id=theme.id, name=theme.name, codes=tuple(codes)))
    return CodingTree(themes=tuple(themes))


def render_coding_tree_markdown(tree: CodingTree) -> str:
    lines = ["# Coding tree", ""]
    for theme in tree.themes:
        lines.append(f"- **{theme.id}: {theme.name}**")
        for code in theme.codes:
            lines.append(f"  - {code.name} ({code.ref})")
            for leaf in code.leaves:
                badge = f" [{leaf.verdict}]" if leaf.verdict else ""
                lines.append(f'    - "{leaf.quote}" ({leaf.source_doc}){badge}')
    return "\n".join(lines) + "\n"


def _cell(text: str) -> str:
    return text.replace("|", "\\|").replace("\n", " ")


def render_theme_table(themeset: ThemeSet, fmt: str = "markdown") -> str:
    """Theme table: id, name, description, and recomputed code counts."""
    rows = [
        (t.id, t.name, t.description, len(t.code_indices)) for t in themeset.themes
    ]
    header = ("ID", "name", "description", "Nr of Codes in the theme")
    return _render_table(header, rows, fmt)


def render_hierarchy_table(hierarchy: ThemeHierarchy, fmt: str = "markdown") -> str:
    rows = []
    for parent in hierarchy.parents:
        subs = "; ".join(
            f"[{i}] {hierarchy.subthemes[i].name}" if 0 <= i < len(hierarchy.subthemes) else f"[{i}]"
            for i in parent.subtheme_indices
        )
        rows.append((parent.name, parent.description, subs))
    return _render_table(("theme", "description", "sub-themes"), rows, fmt)


def render_audit_table(summary: AuditSummary, fmt: str = "markdown") -> str:
    """Audit verdicts as absolute n and relative %."""
    rows = [
        (label, summary.counts[key], f"{summary.percentages[key]:.1f}%")
        for label, key in (("Verbatim", "verbatim"), ("Modified", "modified"), ("Fabricated", "fabricated"))
    ]
    return _render_table(("", "Absolute score (n)", "Relative score (%)"), rows, fmt)


def render_comparison_table(
    staged: AuditSummary, baseline: AuditSummary, fmt: str = "markdown"
) -> str:
    """Side-by-side staged vs monolithic-baseline quote audit."""
    rows = []
    for label, key in (("Verbatim", "verbatim"), ("Modified", "modified"), ("Fabricated", "fabricated")):
        rows.append(
            (
                label,
                staged.counts[key],
                baseline.counts[key],
                f"{staged.percentages[key]:.1f}%",
                f"{baseline.percentages[key]:.1f}%",
            )
        )
    header = ("", "Staged (n)", "Baseline (n)", "Staged (%)", "Baseline (%)")
    return _render_table(header, rows, fmt)


def render_saturation_summary(report: SaturationReport, fmt: str = "markdown") -> str:
    rows = [
        ("total codes", report.total_codes),
        ("unique codes", report.unique_codes),
        ("saturation ratio", f"{report.ratio:.4f}"),
        ("rounds", report.rounds),
        ("per-round sizes", " -> ".join(str(s) for s in report.per_round_sizes)),
    ]
    return _render_table(("measure", "value"), rows, fmt)


def _render_table(header: tuple, rows: list[tuple], fmt: str) -> str:
    if fmt == "markdown":
        lines = ["| " + " | ".join(str(h) for h in header) + " |"]
        lines.append("| " + " | ".join("---" for _ in header) + " |")
        for row in rows:
            lines.append("| " + " | ".join(_cell(str(v)) for v in row) + " |")
        return "\n".join(lines) + "\n"
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return buffer.getvalue()
    if fmt == "json":
        payload = [dict(zip(header, row)) for row in rows]
        return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"
    raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")
