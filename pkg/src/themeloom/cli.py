"""Command-line interface: project lifecycle, stage runs, server, comparison."""

from __future__ import annotations

import logging
import sys
from pathlib import Path

import click

from .corpus import IngestError
from .gateway import GatewayError
from .pipeline import run_stage
from .project import Project, ProjectError, StageOrderError, init_project

log = logging.getLogger(__name__)

PIPELINE_STAGES = ("ingest", "code", "dedup", "themes", "hierarchy", "audit", "report")


class Context:
    def __init__(self):
        self.project_dir = Path(".")
        self.mode: str | None = None
        self.oracle: str | None = None
        self.themes_n: int | None = None
        self.seed: int | None = None

    def project(self) -> Project:
        return Project(self.project_dir)

    def stage_flags(self) -> dict:
        flags = {}
        if self.oracle:
            flags["oracle"] = self.oracle
        if self.themes_n is not None:
            flags["themes_n"] = self.themes_n
        if self.seed is not None:
            flags["seed"] = self.seed
        return flags


@click.group()
@click.option("--project", "-p", "project_dir", default=".", type=click.Path(), help="Project directory.")
@click.option("--mode", type=click.Choice(["live", "replay", "record"]), default=None, help="Gateway mode override.")
@click.option("--oracle", type=click.Choice(["llm", "string-equality"]), default=None, help="Duplicate oracle override.")
@click.option("--themes", "themes_n", type=int, default=None, help="Fixed theme count (omit for open-ended).")
@click.option("--seed", type=int, default=None, help="Seed for sampled audits.")
@click.option("--verbose", "-v", is_flag=True, help="Debug logging.")
@click.pass_context
def main(ctx, project_dir, mode, oracle, themes_n, seed, verbose):
    """Staged thematic-analysis pipeline with replayable model calls."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    state = Context()
    state.project_dir = Path(project_dir)
    state.mode = mode
    state.oracle = oracle
    state.themes_n = themes_n
    state.seed = seed
    ctx.obj = state


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


@main.command()
@click.option("--corpus", type=click.Path(), default=None, help="Corpus directory.")
@click.option("--model", default=None)
@click.option("--base-url", default=None)
@click.option("--research-question", default=None)
@click.pass_obj
def init(state: Context, corpus, model, base_url, research_question):
    """Create a project directory with default config and editable prompts."""
    overrides = {}
    if model:
        overrides["model"] = model
    if base_url:
        overrides["base_url"] = base_url
    if research_question:
        overrides["research_question"] = research_question
    try:
        init_project(state.project_dir, corpus_root=corpus, overrides=overrides)
    except ProjectError as exc:
        _fail(str(exc))
    click.echo(f"initialized project at {state.project_dir}")


def _run(state: Context, stage: str, **extra) -> None:
    try:
        project = state.project()
        flags = state.stage_flags()
        flags.update(extra)
        result = run_stage(project, stage, mode=state.mode, **flags)
    except (ProjectError, StageOrderError, IngestError, GatewayError) as exc:
        _fail(str(exc))
        return
    summary = ", ".join(f"{k}={v}" for k, v in result.details.items())
    click.echo(f"{stage}: {result.status} ({summary})")
    shown = result.warnings[:10]
    for warning in shown:
        click.echo(f"  warning: {warning}")
    if len(result.warnings) > len(shown):
        click.echo(f"  ... and {len(result.warnings) - len(shown)} more warnings")


@main.command()
@click.option("--corpus", type=click.Path(), default=None, help="Override the configured corpus directory.")
@click.pass_obj
def ingest(state: Context, corpus):
    """Ingest the corpus into the project."""
    extra = {"corpus": corpus} if corpus else {}
    _run(state, "ingest", **extra)


@main.command()
@click.argument("stage", type=click.Choice(PIPELINE_STAGES))
@click.option("--strict-assign", is_flag=True, default=False, help="Re-prompt once for unassigned codes.")
@click.option("--rationale", is_flag=True, default=False, help="Ask for a rationale after each merge.")
@click.pass_obj
def run(state: Context, stage, strict_assign, rationale):
    """Run one pipeline stage (predecessors must be done)."""
    extra = {}
    if strict_assign:
        extra["strict_assign"] = True
    if rationale:
        extra["rationale"] = True
    _run(state, stage, **extra)


@main.command()
@click.pass_obj
def baseline(state: Context):
    """Run the monolithic single-prompt baseline for comparison."""
    _run(state, "baseline")


@main.command()
@click.pass_obj
def compare(state: Context):
    """Compare the staged run against the monolithic baseline."""
    _run(state, "compare")


@main.command()
@click.pass_obj
def report(state: Context):
    """Render COREQ mapping, coding tree and tables from stage artifacts."""
    _run(state, "report")


@main.command()
@click.pass_obj
def status(state: Context):
    """Show stage statuses."""
    try:
        project = state.project()
    except ProjectError as exc:
        _fail(str(exc))
        return
    for stage, stage_status in project.stage_statuses().items():
        click.echo(f"{stage:10s} {stage_status}")


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8765)
@click.pass_obj
def serve(state: Context, host, port):
    """Serve the review API (and UI, when built) for this project."""
    import uvicorn

    from .server import create_app

    try:
        app = create_app(state.project_dir)
    except ProjectError as exc:
        _fail(str(exc))
        return
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
