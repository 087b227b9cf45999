"""Project directory layout, configuration, stage DAG and status tracking.

The project directory is the single source of truth: config, cache, stage
artifacts and the audit trail all live in it as inspectable files.
"""

from __future__ import annotations

import json
import os
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .trail import AuditTrail

CONFIG_NAME = "project.yaml"
STATE_NAME = "state.json"
LOCK_NAME = "lock"

STATUS_PENDING = "pending"
STATUS_DONE = "done"
STATUS_FAILED = "failed"
STATUS_STALE = "stale"

# stage -> predecessor groups; each group is satisfied by any one member.
STAGE_PREDECESSORS: dict[str, tuple[tuple[str, ...], ...]] = {
    "ingest": (),
    "code": (("ingest",),),
    "dedup": (("code",),),
    "themes": (("dedup",),),
    "hierarchy": (("dedup",),),
    "audit": (("themes", "hierarchy"),),
    "report": (("audit",),),
    "baseline": (("ingest",),),
    "compare": (("audit",), ("baseline",)),
}

STAGES = tuple(STAGE_PREDECESSORS)

# Which stages consume an artifact a human review action may edit; staleness
# after an edit follows these data dependencies, not the broader stage order.
ARTIFACT_CONSUMERS: dict[str, tuple[str, ...]] = {
    "unique_codes": ("themes", "hierarchy", "audit", "report", "compare"),
    "themes": ("report",),
    "hierarchy": ("report",),
}


class ProjectError(Exception):
    pass


class StageOrderError(ProjectError):
    """A stage was attempted before its predecessor completed."""


class ProjectLockedError(ProjectError):
    pass


def _downstream_of(stage: str) -> set[str]:
    out: set[str] = set()
    frontier = {stage}
    while frontier:
        nxt: set[str] = set()
        for candidate, groups in STAGE_PREDECESSORS.items():
            if candidate in out:
                continue
            deps = {dep for group in groups for dep in group}
            if deps & frontier:
                nxt.add(candidate)
        out |= nxt
        frontier = nxt
    return out


@dataclass
class ProjectConfig:
    corpus_root: str = "corpus"
    group_map: dict[str, str] = field(default_factory=dict)
    output_dir: str = "artifacts"
    model: str = "gpt-4o"
    base_url: str = "https://api.openai.com/v1"
    research_question: str = ""
    mode: str = "replay"
    cache_dir: str = "cache"
    oracle: str = "llm"
    seed: int = 0
    themes_n: int | None = None
    n_sub: int = 14
    n_top: int = 10
    batch_size: int = 20
    max_in_flight: int = 4
    max_chunk_words: int | None = None
    baseline_token_limit: int = 100_000
    audit_sample: int | None = None
    max_gap_chars: int = 1000
    edit_threshold: float = 0.85
    match_threshold: float = 0.8
    min_quote_words: int = 150
    description_words: tuple[int, int] = (25, 100)
    rationale: bool = False
    strict_assign: bool = False
    participant_checking: str = "Not applicable (secondary data analysis)"
    coreq_overrides: dict[int, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        data = {
            "corpus_root": self.corpus_root,
            "group_map": dict(self.group_map),
            "output_dir": self.output_dir,
            "model": self.model,
            "base_url": self.base_url,
            "research_question": self.research_question,
            "mode": self.mode,
            "cache_dir": self.cache_dir,
            "oracle": self.oracle,
            "seed": self.seed,
            "themes_n": self.themes_n,
            "n_sub": self.n_sub,
            "n_top": self.n_top,
            "batch_size": self.batch_size,
            "max_in_flight": self.max_in_flight,
            "max_chunk_words": self.max_chunk_words,
            "baseline_token_limit": self.baseline_token_limit,
            "audit_sample": self.audit_sample,
            "max_gap_chars": self.max_gap_chars,
            "edit_threshold": self.edit_threshold,
            "match_threshold": self.match_threshold,
            "min_quote_words": self.min_quote_words,
            "description_words": list(self.description_words),
            "rationale": self.rationale,
            "strict_assign": self.strict_assign,
            "participant_checking": self.participant_checking,
            "coreq_overrides": {str(k): v for k, v in self.coreq_overrides.items()},
        }
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ProjectConfig":
        kwargs = dict(data)
        if "description_words" in kwargs:
            kwargs["description_words"] = tuple(kwargs["description_words"])
        if "coreq_overrides" in kwargs:
            kwargs["coreq_overrides"] = {int(k): v for k, v in kwargs["coreq_overrides"].items()}
        known = {f for f in cls.__dataclass_fields__}  # type: ignore[attr-defined]
        unknown = set(kwargs) - known
        if unknown:
            raise ProjectError(f"unknown config keys: {sorted(unknown)}")
        return cls(**kwargs)


def write_json_atomic(path: Path, payload) -> None:
    """Serialize deterministically and swap into place."""
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(payload, indent=2, ensure_ascii=False) + "\n"
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def write_text_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


class Project:
    """Accessor for one analysis project directory."""

    def __init__(self, directory: str | Path):
        self.dir = Path(directory)
        config_path = self.dir / CONFIG_NAME
        if not config_path.exists():
            raise ProjectError(f"{config_path} not found; run 'init' first")
        raw = yaml.safe_load(config_path.read_text(encoding="utf-8")) or {}
        self.config = ProjectConfig.from_dict(raw)
        self.trail = AuditTrail(self.dir / "trail" / "log")

    # -- paths -------------------------------------------------------------

    @property
    def corpus_root(self) -> Path:
        return self._resolve(self.config.corpus_root)

    @property
    def cache_dir(self) -> Path:
        return self._resolve(self.config.cache_dir)

    @property
    def artifacts_dir(self) -> Path:
        return self._resolve(self.config.output_dir)

    def _resolve(self, value: str) -> Path:
        path = Path(value)
        return path if path.is_absolute() else self.dir / path

    def artifact(self, *parts: str) -> Path:
        return self.artifacts_dir.joinpath(*parts)

    # -- state -------------------------------------------------------------

    def _state(self) -> dict:
        path = self.dir / STATE_NAME
        if not path.exists():
            return {"stages": {}}
        return json.loads(path.read_text(encoding="utf-8"))

    def _write_state(self, state: dict) -> None:
        write_json_atomic(self.dir / STATE_NAME, state)

    def stage_status(self, stage: str) -> str:
        return self._state()["stages"].get(stage, STATUS_PENDING)

    def stage_statuses(self) -> dict[str, str]:
        state = self._state()["stages"]
        return {stage: state.get(stage, STATUS_PENDING) for stage in STAGES}

    def check_predecessors(self, stage: str) -> None:
        if stage not in STAGE_PREDECESSORS:
            raise ProjectError(f"unknown stage {stage!r}")
        for group in STAGE_PREDECESSORS[stage]:
            if not any(self.stage_status(dep) == STATUS_DONE for dep in group):
                raise StageOrderError(f"stage '{group[0]}' not done")

    def mark_stage(self, stage: str, status: str) -> None:
        state = self._state()
        state["stages"][stage] = status
        if status == STATUS_DONE:
            # Re-running a stage invalidates everything downstream of it.
            for downstream in _downstream_of(stage):
                if state["stages"].get(downstream) == STATUS_DONE:
                    state["stages"][downstream] = STATUS_STALE
        self._write_state(state)

    def mark_downstream_stale(self, stage: str) -> list[str]:
        return self.mark_stages_stale(sorted(_downstream_of(stage)))

    def mark_stages_stale(self, stages: list[str]) -> list[str]:
        state = self._state()
        touched = []
        for stage in stages:
            if state["stages"].get(stage) == STATUS_DONE:
                state["stages"][stage] = STATUS_STALE
                touched.append(stage)
        self._write_state(state)
        return touched

    @contextmanager
    def lock(self):
        """One pipeline execution per project at a time."""
        path = self.dir / LOCK_NAME
        try:
            fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise ProjectLockedError(
                f"project is locked by another run (remove {path} if stale)"
            ) from None
        try:
            os.write(fd, str(os.getpid()).encode())
            os.close(fd)
            yield
        finally:
            if path.exists():
                path.unlink()

    # -- artifact IO ---------------------------------------------------------

    def load_artifact(self, *parts: str) -> dict:
        path = self.artifact(*parts)
        if not path.exists():
            raise ProjectError(f"artifact {path} not found")
        return json.loads(path.read_text(encoding="utf-8"))

    def has_artifact(self, *parts: str) -> bool:
        return self.artifact(*parts).exists()


def init_project(
    directory: str | Path,
    corpus_root: str | None = None,
    overrides: dict | None = None,
    copy_prompts: bool = True,
) -> Project:
    """Create a project directory with a default config and editable prompts."""
    from . import prompts as prompt_pkg

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    config_path = directory / CONFIG_NAME
    if config_path.exists():
        raise ProjectError(f"{config_path} already exists")

    config = ProjectConfig()
    if corpus_root:
        config.corpus_root = corpus_root
    for key, value in (overrides or {}).items():
        if not hasattr(config, key):
            raise ProjectError(f"unknown config key {key!r}")
        setattr(config, key, value)

    config_path.write_text(
        yaml.safe_dump(config.to_dict(), sort_keys=False, allow_unicode=True),
        encoding="utf-8",
    )
    if copy_prompts:
        prompt_dir = directory / "prompts"
        prompt_dir.mkdir(exist_ok=True)
        for name in prompt_pkg.TEMPLATE_NAMES:
            (prompt_dir / f"{name}.txt").write_text(
                prompt_pkg.load_template(name), encoding="utf-8"
            )
    return Project(directory)
