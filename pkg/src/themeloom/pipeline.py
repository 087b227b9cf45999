"""Stage runner: executes pipeline stages over a project directory.

Artifacts are written atomically and deterministically, so a replayed run is
a pure function of (corpus, config, cache).
"""

from __future__ import annotations

import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from . import prompts, reporting
from .audit import AuditConfig, AuditSummary, QuoteAuditRecord, audit_codeset, classify_quote, CorpusIndex
from .coding import (
    CodeSet,
    CodingError,
    ValidationBounds,
    code_document,
    run_monolithic_baseline,
)
from .corpus import Corpus, count_participants, ingest_corpus
from .gateway import Gateway, GenerationParams
from .project import (
    Project,
    ProjectError,
    STATUS_DONE,
    STATUS_FAILED,
    write_json_atomic,
    write_text_atomic,
)
from .saturation import (
    LlmOracle,
    StringEqualityOracle,
    UniqueCode,
    make_llm_rationale_fn,
    run_tournament,
)
from .theming import ThemeHierarchy, ThemeSet, generate_hierarchy, generate_themes, validate_assignment

log = logging.getLogger(__name__)

QUOTED_SPAN = re.compile(r'"([^"]+)"|“([^”]+)”')


@dataclass
class StageResult:
    stage: str
    status: str
    warnings: list[str]
    details: dict


def make_gateway(project: Project, mode: str | None = None, stage: str = "") -> Gateway:
    mode = mode or project.config.mode

    def on_call(event: dict) -> None:
        project.trail.append(stage, "gateway_call", event)

    return Gateway(
        mode=mode,
        cache_dir=project.cache_dir,
        base_url=project.config.base_url,
        max_in_flight=project.config.max_in_flight,
        on_call=on_call,
    )


def audit_config(project: Project) -> AuditConfig:
    cfg = project.config
    return AuditConfig(
        max_gap_chars=cfg.max_gap_chars,
        edit_threshold=cfg.edit_threshold,
        match_threshold=cfg.match_threshold,
    )


def load_corpus(project: Project) -> Corpus:
    return Corpus.from_dict(project.load_artifact("corpus.json"))


def load_codesets(project: Project) -> list[CodeSet]:
    manifest = project.load_artifact("codes_manifest.json")
    return [
        CodeSet.from_dict(project.load_artifact("codes", f"{doc_id}.json"))
        for doc_id in manifest["documents"]
    ]


def load_unique_codes(project: Project) -> list[UniqueCode]:
    data = project.load_artifact("unique_codes.json")
    return [UniqueCode.from_dict(c) for c in data["codes"]]


def load_themeset(project: Project) -> ThemeSet:
    return ThemeSet.from_dict(project.load_artifact("themes.json"))


def load_audit_records(project: Project) -> tuple[list[QuoteAuditRecord], AuditSummary]:
    from .audit import Evidence, Verdict

    data = project.load_artifact("audit.json")
    records = [
        QuoteAuditRecord(
            code_ref=r["code_ref"],
            quote=r["quote"],
            verdict=Verdict(r["verdict"]),
            matched_doc=r["matched_doc"],
            evidence=Evidence(
                spans=tuple(tuple(s) for s in r["evidence"]["spans"]),
                fragments=tuple(r["evidence"]["fragments"]),
                score=r["evidence"]["score"],
            ),
        )
        for r in data["records"]
    ]
    summary = AuditSummary(
        counts=data["summary"]["counts"],
        percentages=data["summary"]["percentages"],
        sample_size=data["summary"]["sample_size"],
    )
    return records, summary


def run_stage(project: Project, stage: str, mode: str | None = None, **flags) -> StageResult:
    """Run one stage end to end: DAG check, lock, execute, persist, record."""
    project.check_predecessors(stage)
    runner = _RUNNERS.get(stage)
    if runner is None:
        raise ProjectError(f"unknown stage {stage!r}")
    with project.lock():
        project.trail.append(stage, "stage_start", {"mode": mode or project.config.mode})
        try:
            result = runner(project, mode, **flags)
        except Exception as exc:
            project.mark_stage(stage, STATUS_FAILED)
            project.trail.append(stage, "stage_failed", {"error": str(exc)})
            raise
        project.mark_stage(stage, STATUS_DONE)
        project.trail.append(
            stage,
            "stage_done",
            {"status": result.status, "warnings": len(result.warnings), **result.details},
        )
    return result


# -- stage implementations ---------------------------------------------------


def _run_ingest(project: Project, mode: str | None, **flags) -> StageResult:
    corpus_root = flags.get("corpus") or project.corpus_root
    corpus = ingest_corpus(corpus_root, project.config.group_map)
    counts, total = count_participants(corpus)
    payload = corpus.to_dict()
    payload["participants"] = {"per_group": counts, "total": total}
    write_json_atomic(project.artifact("corpus.json"), payload)
    return StageResult("ingest", STATUS_DONE, [], {"documents": total, "groups": len(counts)})


def _run_code(project: Project, mode: str | None, **flags) -> StageResult:
    corpus = load_corpus(project)
    gateway = make_gateway(project, mode, stage="code")
    params = GenerationParams.coding_defaults(project.config.model)
    template = prompts.load_template("initial_coding", project.dir)
    bounds = ValidationBounds(
        description_words=project.config.description_words,
        min_quote_words=project.config.min_quote_words,
    )

    def run_one(doc):
        return code_document(
            gateway,
            doc,
            params,
            template,
            mode=mode,
            bounds=bounds,
            max_chunk_words=project.config.max_chunk_words,
        )

    codesets: dict[str, CodeSet] = {}
    failures: dict[str, str] = {}
    workers = max(1, min(project.config.max_in_flight, len(corpus.documents)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(run_one, doc): doc for doc in corpus.documents}
        for future, doc in futures.items():
            try:
                codesets[doc.id] = future.result()
            except CodingError as exc:
                failures[doc.id] = str(exc)
                log.warning("document failed coding: %s", exc)

    if not codesets:
        raise ProjectError("coding failed for every document")

    warnings: list[str] = []
    done_ids = sorted(codesets)
    for doc_id in done_ids:
        write_json_atomic(project.artifact("codes", f"{doc_id}.json"), codesets[doc_id].to_dict())
        warnings.extend(codesets[doc_id].warnings)
    manifest = {
        "documents": done_ids,
        "failed": {k: failures[k] for k in sorted(failures)},
        "total_codes": sum(len(cs.codes) for cs in codesets.values()),
        "warnings": {doc_id: codesets[doc_id].warnings for doc_id in done_ids},
    }
    write_json_atomic(project.artifact("codes_manifest.json"), manifest)
    status = STATUS_DONE
    if failures:
        warnings.append(f"documents failed: {sorted(failures)}")
    return StageResult("code", status, warnings, {"total_codes": manifest["total_codes"], "failed": len(failures)})


def _make_oracle(project: Project, gateway: Gateway, mode: str | None, oracle_name: str):
    if oracle_name == "string-equality":
        return StringEqualityOracle()
    if oracle_name == "llm":
        return LlmOracle(
            gateway,
            GenerationParams.coding_defaults(project.config.model),
            template=prompts.load_template("duplicates", project.dir),
            mode=mode,
            batch_size=project.config.batch_size,
        )
    raise ProjectError(f"unknown oracle {oracle_name!r} (expected 'llm' or 'string-equality')")


def _run_dedup(project: Project, mode: str | None, **flags) -> StageResult:
    codesets = load_codesets(project)
    oracle_name = flags.get("oracle") or project.config.oracle
    gateway = make_gateway(project, mode, stage="dedup")
    oracle = _make_oracle(project, gateway, mode, oracle_name)
    rationale_fn = None
    if flags.get("rationale", project.config.rationale) and oracle_name == "llm":
        rationale_fn = make_llm_rationale_fn(
            gateway,
            GenerationParams.coding_defaults(project.config.model),
            template=prompts.load_template("merge_rationale", project.dir),
            mode=mode,
        )

    unique, report, decisions = run_tournament(codesets, oracle, rationale_fn=rationale_fn)
    write_json_atomic(
        project.artifact("unique_codes.json"), {"codes": [c.to_dict() for c in unique]}
    )
    write_json_atomic(
        project.artifact("merge_decisions.json"),
        {"oracle": oracle_name, "decisions": [d.to_dict() for d in decisions]},
    )
    write_json_atomic(project.artifact("saturation.json"), report.to_dict())
    return StageResult(
        "dedup",
        STATUS_DONE,
        [],
        {"total_codes": report.total_codes, "unique_codes": report.unique_codes},
    )


def _run_themes(project: Project, mode: str | None, **flags) -> StageResult:
    codes = load_unique_codes(project)
    gateway = make_gateway(project, mode, stage="themes")
    params = GenerationParams.theming_defaults(project.config.model)
    themeset = generate_themes(
        gateway,
        codes,
        project.config.research_question,
        params,
        n_themes=flags.get("themes_n", project.config.themes_n),
        template=prompts.load_template("themes", project.dir),
        mode=mode,
        strict_assign=flags.get("strict_assign", project.config.strict_assign),
    )
    payload = themeset.to_dict()
    payload["assignment"] = validate_assignment(themeset, len(codes)).to_dict()
    write_json_atomic(project.artifact("themes.json"), payload)
    return StageResult(
        "themes",
        STATUS_DONE,
        themeset.warnings,
        {"themes": len(themeset.themes), "unassigned": len(themeset.unassigned)},
    )


def _run_hierarchy(project: Project, mode: str | None, **flags) -> StageResult:
    codes = load_unique_codes(project)
    gateway = make_gateway(project, mode, stage="hierarchy")
    params = GenerationParams.theming_defaults(project.config.model)
    hierarchy, warnings = generate_hierarchy(
        gateway,
        codes,
        project.config.research_question,
        n_sub=flags.get("n_sub", project.config.n_sub),
        n_top=flags.get("n_top", project.config.n_top),
        params=params,
        mode=mode,
        themes_template=prompts.load_template("themes", project.dir),
        subthemes_template=prompts.load_template("subthemes", project.dir),
    )
    write_json_atomic(project.artifact("hierarchy.json"), hierarchy.to_dict())
    return StageResult(
        "hierarchy",
        STATUS_DONE,
        warnings,
        {"subthemes": len(hierarchy.subthemes), "parents": len(hierarchy.parents), "flags": len(hierarchy.flags)},
    )


def _run_audit(project: Project, mode: str | None, **flags) -> StageResult:
    corpus = load_corpus(project)
    codes = load_unique_codes(project)
    sample = flags.get("sample", project.config.audit_sample)
    seed = flags.get("seed", project.config.seed)
    records, summary = audit_codeset(codes, corpus, sample=sample, seed=seed, cfg=audit_config(project))
    write_json_atomic(
        project.artifact("audit.json"),
        {
            "seed": seed,
            "sample": sample,
            "records": [r.to_dict() for r in records],
            "summary": summary.to_dict(),
        },
    )
    return StageResult("audit", STATUS_DONE, [], {"quotes_audited": summary.sample_size, **summary.counts})


def _review_edit_count(project: Project) -> int:
    return sum(1 for event in project.trail.events() if event["kind"] == "review_action")


def _run_report(project: Project, mode: str | None, **flags) -> StageResult:
    themeset = load_themeset(project) if project.has_artifact("themes.json") else None
    hierarchy = None
    if project.has_artifact("hierarchy.json"):
        hierarchy = ThemeHierarchy.from_dict(project.load_artifact("hierarchy.json"))
    audit_records, audit_summary = (
        load_audit_records(project) if project.has_artifact("audit.json") else ([], None)
    )
    unique = load_unique_codes(project)

    coreq = reporting.build_coreq(
        model_id=project.config.model,
        themes=themeset,
        hierarchy=hierarchy,
        audit_summary=audit_summary,
        review_edit_count=_review_edit_count(project),
        participant_checking=project.config.participant_checking,
        overrides=project.config.coreq_overrides,
    )
    write_text_atomic(project.artifact("report", "coreq.md"), reporting.render_coreq_markdown(coreq))
    write_json_atomic(project.artifact("report", "coreq.json"), coreq.to_dict())

    files = 2
    if themeset is not None:
        tree = reporting.export_coding_tree(themeset, unique, audit_records)
        write_text_atomic(
            project.artifact("report", "coding_tree.md"), reporting.render_coding_tree_markdown(tree)
        )
        write_json_atomic(project.artifact("report", "coding_tree.json"), tree.to_dict())
        for fmt, suffix in (("markdown", "md"), ("csv", "csv"), ("json", "json")):
            write_text_atomic(
                project.artifact("report", f"themes.{suffix}"),
                reporting.render_theme_table(themeset, fmt),
            )
        files += 5
    if hierarchy is not None:
        write_text_atomic(
            project.artifact("report", "hierarchy.md"), reporting.render_hierarchy_table(hierarchy)
        )
        files += 1
    if audit_summary is not None:
        write_text_atomic(
            project.artifact("report", "audit.md"), reporting.render_audit_table(audit_summary)
        )
        files += 1
    if project.has_artifact("saturation.json"):
        from .saturation import SaturationReport

        data = project.load_artifact("saturation.json")
        report = SaturationReport(**data)
        write_text_atomic(
            project.artifact("report", "saturation.md"), reporting.render_saturation_summary(report)
        )
        files += 1
    return StageResult("report", STATUS_DONE, [], {"files": files})


def _run_baseline(project: Project, mode: str | None, **flags) -> StageResult:
    corpus = load_corpus(project)
    gateway = make_gateway(project, mode, stage="baseline")
    params = GenerationParams.coding_defaults(project.config.model)
    result = run_monolithic_baseline(
        gateway,
        corpus,
        params,
        prompts.load_template("monolithic", project.dir),
        mode=mode,
        token_limit=project.config.baseline_token_limit,
    )
    write_json_atomic(project.artifact("baseline.json"), result.to_dict())
    return StageResult("baseline", STATUS_DONE, result.warnings, {"chars": len(result.raw_text)})


def extract_quoted_spans(text: str) -> list[str]:
    """Pull double-quoted spans out of free text (straight or curly quotes)."""
    spans = []
    for match in QUOTED_SPAN.finditer(text):
        spans.append(match.group(1) or match.group(2))
    return spans


def _run_compare(project: Project, mode: str | None, **flags) -> StageResult:
    _, staged_summary = load_audit_records(project)
    baseline = project.load_artifact("baseline.json")
    corpus = load_corpus(project)

    quotes = extract_quoted_spans(baseline["raw_text"])
    index = CorpusIndex(corpus)
    cfg = audit_config(project)
    records = [classify_quote(q, index, cfg, code_ref=f"baseline:{i}") for i, q in enumerate(quotes)]
    baseline_summary = AuditSummary.from_records(records)

    comparison = {
        "staged": staged_summary.to_dict(),
        "baseline": baseline_summary.to_dict(),
        "baseline_quotes": [r.to_dict() for r in records],
        "note": (
            "baseline quotes were extracted by double-quote span scanning; "
            "unquoted claims are not auditable"
        ),
    }
    write_json_atomic(project.artifact("comparison.json"), comparison)
    write_text_atomic(
        project.artifact("report", "comparison.md"),
        reporting.render_comparison_table(staged_summary, baseline_summary),
    )
    return StageResult(
        "compare",
        STATUS_DONE,
        [],
        {"baseline_quotes": len(quotes)},
    )


_RUNNERS = {
    "ingest": _run_ingest,
    "code": _run_code,
    "dedup": _run_dedup,
    "themes": _run_themes,
    "hierarchy": _run_hierarchy,
    "audit": _run_audit,
    "report": _run_report,
    "baseline": _run_baseline,
    "compare": _run_compare,
}
