"""Prompt templates shipped as editable text files.

A project may override any template by placing a file with the same name in
its ``prompts/`` directory; the packaged defaults are used otherwise.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

TEMPLATE_NAMES = (
    "initial_coding",
    "monolithic",
    "duplicates",
    "themes",
    "subthemes",
    "merge_rationale",
    "assign_remainder",
)


def load_template(name: str, project_dir: str | Path | None = None) -> str:
    if name not in TEMPLATE_NAMES:
        raise ValueError(f"unknown prompt template {name!r}")
    if project_dir is not None:
        override = Path(project_dir) / "prompts" / f"{name}.txt"
        if override.exists():
            return override.read_text(encoding="utf-8")
    return resources.files(__package__).joinpath(f"{name}.txt").read_text(encoding="utf-8")


def render(template: str, **slots: str) -> str:
    """Fill ``{slot}`` placeholders by literal replacement.

    Templates contain JSON braces, so str.format is unusable here.
    """
    out = template
    for key, value in slots.items():
        out = out.replace("{" + key + "}", str(value))
    return out


def require_slot(template: str, slot: str) -> None:
    if "{" + slot + "}" not in template:
        raise ValueError(f"template is missing the {{{slot}}} slot")
