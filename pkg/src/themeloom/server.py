"""Local HTTP API for the review loop.

Read endpoints expose every stage artifact; write endpoints apply review
actions, append to the audit trail and flag downstream stages stale. The
browser UI is served as static assets when a build is present; it has no
capability the JSON API does not.
"""

from __future__ import annotations

import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .pipeline import load_codesets, load_unique_codes, run_stage
from .project import (
    ARTIFACT_CONSUMERS,
    Project,
    ProjectError,
    StageOrderError,
    write_json_atomic,
)
from .review import ReviewError, apply_rejection, reject_merge
from .saturation import MergeDecision
from .theming import ThemeSet, validate_assignment


class ThemeEdit(BaseModel):
    name: str | None = None
    description: str | None = None


class CodeMove(BaseModel):
    add: list[int] = []
    remove: list[int] = []


class PromoteSubtheme(BaseModel):
    subtheme_index: int


class AssignSubtheme(BaseModel):
    subtheme_index: int
    parent_index: int


class RerunRequest(BaseModel):
    stage: str
    mode: str | None = None


def create_app(project_dir: str | Path, static_dir: str | Path | None = None) -> FastAPI:
    project = Project(project_dir)
    app = FastAPI(title="themeloom review API")
    write_lock = threading.Lock()

    def artifact_or_404(*parts: str) -> dict:
        try:
            return project.load_artifact(*parts)
        except ProjectError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    # -- read endpoints ------------------------------------------------------

    @app.get("/api/state")
    def get_state():
        return {"stages": project.stage_statuses(), "config": project.config.to_dict()}

    @app.get("/api/documents")
    def get_documents():
        corpus = artifact_or_404("corpus.json")
        return {
            "documents": [
                {k: d[k] for k in ("id", "group", "word_count")} for d in corpus["documents"]
            ],
            "participants": corpus.get("participants", {}),
        }

    @app.get("/api/documents/{doc_id}")
    def get_document(doc_id: str):
        corpus = artifact_or_404("corpus.json")
        for doc in corpus["documents"]:
            if doc["id"] == doc_id:
                return doc
        raise HTTPException(status_code=404, detail=f"no document {doc_id!r}")

    @app.get("/api/codes")
    def get_codes():
        manifest = artifact_or_404("codes_manifest.json")
        return {
            "manifest": manifest,
            "codesets": [artifact_or_404("codes", f"{doc_id}.json") for doc_id in manifest["documents"]],
        }

    @app.get("/api/unique-codes")
    def get_unique_codes():
        return artifact_or_404("unique_codes.json")

    @app.get("/api/merge-decisions")
    def get_merge_decisions():
        if not project.has_artifact("merge_decisions.json"):
            return {"oracle": None, "decisions": []}
        return project.load_artifact("merge_decisions.json")

    @app.get("/api/saturation")
    def get_saturation():
        return artifact_or_404("saturation.json")

    @app.get("/api/themes")
    def get_themes():
        return artifact_or_404("themes.json")

    @app.get("/api/hierarchy")
    def get_hierarchy():
        return artifact_or_404("hierarchy.json")

    @app.get("/api/audit")
    def get_audit():
        return artifact_or_404("audit.json")

    @app.get("/api/baseline")
    def get_baseline():
        return artifact_or_404("baseline.json")

    @app.get("/api/comparison")
    def get_comparison():
        return artifact_or_404("comparison.json")

    @app.get("/api/trail")
    def get_trail():
        return {"events": project.trail.events(), "intact": project.trail.verify() is None}

    # -- review actions --------------------------------------------------------

    def record_action(action: str, payload: dict, edited_artifact: str) -> dict:
        stale = project.mark_stages_stale(list(ARTIFACT_CONSUMERS[edited_artifact]))
        event = project.trail.append("review", "review_action", {"action": action, **payload})
        return {"stale": stale, "trail_index": event["index"]}

    @app.post("/api/review/merges/{decision_id}/reject")
    def post_reject_merge(decision_id: int):
        with write_lock:
            decisions_doc = artifact_or_404("merge_decisions.json")
            decisions = [MergeDecision.from_dict(d) for d in decisions_doc["decisions"]]
            unique = load_unique_codes(project)
            codesets = load_codesets(project)
            try:
                rejection = reject_merge(decision_id, decisions, unique, codesets)
            except ReviewError as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from exc
            updated = apply_rejection(unique, rejection)

            write_json_atomic(
                project.artifact("unique_codes.json"), {"codes": [c.to_dict() for c in updated]}
            )
            decisions_doc["decisions"] = [d.to_dict() for d in decisions]
            write_json_atomic(project.artifact("merge_decisions.json"), decisions_doc)
            if project.has_artifact("saturation.json"):
                saturation = project.load_artifact("saturation.json")
                saturation["unique_codes"] = len(updated)
                saturation["ratio"] = len(updated) / saturation["total_codes"]
                write_json_atomic(project.artifact("saturation.json"), saturation)

            meta = record_action(
                "reject_merge",
                {"decision_id": decision_id, "split_off": rejection.split_off.uid},
                edited_artifact="unique_codes",
            )
            return {"unique_codes": len(updated), "split_off": rejection.split_off.to_dict(), **meta}

    @app.post("/api/review/merges/{decision_id}/accept")
    def post_accept_merge(decision_id: int):
        with write_lock:
            decisions_doc = artifact_or_404("merge_decisions.json")
            found = None
            for decision in decisions_doc["decisions"]:
                if decision["id"] == decision_id:
                    found = decision
                    break
            if found is None:
                raise HTTPException(status_code=404, detail=f"no decision {decision_id}")
            if found.get("review") == "rejected":
                raise HTTPException(status_code=409, detail="decision already rejected")
            found["review"] = "accepted"
            write_json_atomic(project.artifact("merge_decisions.json"), decisions_doc)
            event = project.trail.append(
                "review", "review_action", {"action": "accept_merge", "decision_id": decision_id}
            )
            return {"decision_id": decision_id, "trail_index": event["index"]}

    def _load_themeset() -> ThemeSet:
        return ThemeSet.from_dict(artifact_or_404("themes.json"))

    def _save_themeset(themeset: ThemeSet) -> None:
        n_codes = len(load_unique_codes(project))
        assigned = {i for t in themeset.themes for i in t.code_indices}
        themeset.unassigned = sorted(set(range(n_codes)) - assigned)
        payload = themeset.to_dict()
        payload["assignment"] = validate_assignment(themeset, n_codes).to_dict()
        write_json_atomic(project.artifact("themes.json"), payload)

    @app.post("/api/review/themes/{theme_id}")
    def post_edit_theme(theme_id: str, edit: ThemeEdit):
        with write_lock:
            themeset = _load_themeset()
            theme = next((t for t in themeset.themes if t.id == theme_id), None)
            if theme is None:
                raise HTTPException(status_code=404, detail=f"no theme {theme_id!r}")
            if edit.name is not None:
                theme.name = edit.name
            if edit.description is not None:
                theme.description = edit.description
            _save_themeset(themeset)
            meta = record_action(
                "rename_theme",
                {"theme_id": theme_id, "name": theme.name},
                edited_artifact="themes",
            )
            return {"theme": theme.to_dict(), **meta}

    @app.post("/api/review/themes/{theme_id}/codes")
    def post_move_codes(theme_id: str, move: CodeMove):
        with write_lock:
            themeset = _load_themeset()
            theme = next((t for t in themeset.themes if t.id == theme_id), None)
            if theme is None:
                raise HTTPException(status_code=404, detail=f"no theme {theme_id!r}")
            n_codes = len(load_unique_codes(project))
            for idx in move.add:
                if not 0 <= idx < n_codes:
                    raise HTTPException(status_code=422, detail=f"index {idx} out of range")
                if idx not in theme.code_indices:
                    theme.code_indices.append(idx)
            for idx in move.remove:
                if idx in theme.code_indices:
                    theme.code_indices.remove(idx)
            _save_themeset(themeset)
            meta = record_action(
                "reassign_code",
                {"theme_id": theme_id, "add": move.add, "remove": move.remove},
                edited_artifact="themes",
            )
            return {"theme": theme.to_dict(), **meta}

    @app.post("/api/review/hierarchy/promote")
    def post_promote_subtheme(body: PromoteSubtheme):
        with write_lock:
            hierarchy = artifact_or_404("hierarchy.json")
            subthemes = hierarchy["subthemes"]
            idx = body.subtheme_index
            if not 0 <= idx < len(subthemes):
                raise HTTPException(status_code=422, detail=f"no sub-theme {idx}")
            for parent in hierarchy["parents"]:
                parent["subtheme_indices"] = [i for i in parent["subtheme_indices"] if i != idx]
            hierarchy["parents"].append(
                {
                    "name": subthemes[idx]["name"],
                    "description": subthemes[idx]["description"],
                    "subtheme_indices": [idx],
                }
            )
            hierarchy["flags"] = _recompute_flags(hierarchy)
            write_json_atomic(project.artifact("hierarchy.json"), hierarchy)
            meta = record_action(
                "promote_subtheme", {"subtheme_index": idx}, edited_artifact="hierarchy"
            )
            return {"parents": hierarchy["parents"], "flags": hierarchy["flags"], **meta}

    @app.post("/api/review/hierarchy/assign")
    def post_assign_subtheme(body: AssignSubtheme):
        with write_lock:
            hierarchy = artifact_or_404("hierarchy.json")
            idx = body.subtheme_index
            if not 0 <= idx < len(hierarchy["subthemes"]):
                raise HTTPException(status_code=422, detail=f"no sub-theme {idx}")
            if not 0 <= body.parent_index < len(hierarchy["parents"]):
                raise HTTPException(status_code=422, detail=f"no parent {body.parent_index}")
            for parent in hierarchy["parents"]:
                parent["subtheme_indices"] = [i for i in parent["subtheme_indices"] if i != idx]
            hierarchy["parents"][body.parent_index]["subtheme_indices"].append(idx)
            hierarchy["flags"] = _recompute_flags(hierarchy)
            write_json_atomic(project.artifact("hierarchy.json"), hierarchy)
            meta = record_action(
                "assign_subtheme",
                {"subtheme_index": idx, "parent_index": body.parent_index},
                edited_artifact="hierarchy",
            )
            return {"parents": hierarchy["parents"], "flags": hierarchy["flags"], **meta}

    @app.post("/api/review/rerun")
    def post_rerun(body: RerunRequest):
        with write_lock:
            try:
                result = run_stage(project, body.stage, mode=body.mode)
            except StageOrderError as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from exc
            except ProjectError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
            return {
                "stage": body.stage,
                "status": result.status,
                "details": result.details,
                "warnings": result.warnings[:20],
            }

    resolved_static = Path(static_dir) if static_dir else _default_static_dir()
    if resolved_static and resolved_static.is_dir():
        app.mount("/", StaticFiles(directory=resolved_static, html=True), name="ui")
    return app


def _recompute_flags(hierarchy: dict) -> list[str]:
    counts = {i: 0 for i in range(len(hierarchy["subthemes"]))}
    for parent in hierarchy["parents"]:
        for idx in parent["subtheme_indices"]:
            if idx in counts:
                counts[idx] += 1
    flags = []
    for idx in sorted(counts):
        if counts[idx] > 1:
            flags.append(f"duplicate sub-theme {idx}")
        elif counts[idx] == 0:
            flags.append(f"unassigned sub-theme {idx}")
    return flags


def _default_static_dir() -> Path | None:
    # Repo layout: frontend/dist next to src/; absent in installed packages.
    candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    return candidate if candidate.is_dir() else None
