from __future__ import annotations

import pytest

from themeloom.project import (
    Project,
    ProjectError,
    ProjectLockedError,
    STATUS_DONE,
    STATUS_PENDING,
    STATUS_STALE,
    StageOrderError,
    init_project,
)


@pytest.fixture
def project(tmp_path):
    return init_project(tmp_path / "proj", copy_prompts=False)


class TestInit:
    def test_creates_config(self, tmp_path):
        project = init_project(tmp_path / "p")
        assert (tmp_path / "p" / "project.yaml").exists()
        assert project.config.mode == "replay"

    def test_prompts_copied(self, tmp_path):
        init_project(tmp_path / "p")
        assert (tmp_path / "p" / "prompts" / "initial_coding.txt").exists()

    def test_double_init_rejected(self, tmp_path):
        init_project(tmp_path / "p")
        with pytest.raises(ProjectError, match="already exists"):
            init_project(tmp_path / "p")

    def test_unknown_override_rejected(self, tmp_path):
        with pytest.raises(ProjectError, match="unknown config key"):
            init_project(tmp_path / "p", overrides={"no_such_key": 1})

    def test_missing_config_rejected(self, tmp_path):
        with pytest.raises(ProjectError, match="init"):
            Project(tmp_path)


class TestDag:
    def test_fresh_project_all_pending(self, project):
        assert all(s == STATUS_PENDING for s in project.stage_statuses().values())

    def test_code_before_ingest_names_predecessor(self, project):
        with pytest.raises(StageOrderError, match="stage 'ingest' not done"):
            project.check_predecessors("code")

    @pytest.mark.parametrize(
        "stage,missing",
        [
            ("code", "ingest"),
            ("dedup", "code"),
            ("themes", "dedup"),
            ("hierarchy", "dedup"),
            ("audit", "themes"),
            ("report", "audit"),
            ("baseline", "ingest"),
            ("compare", "audit"),
        ],
    )
    def test_every_stage_guarded(self, project, stage, missing):
        with pytest.raises(StageOrderError, match=f"stage '{missing}' not done"):
            project.check_predecessors(stage)

    def test_audit_satisfied_by_hierarchy_alone(self, project):
        for stage in ("ingest", "code", "dedup", "hierarchy"):
            project.mark_stage(stage, STATUS_DONE)
        project.check_predecessors("audit")  # no raise

    def test_rerunning_dedup_marks_downstream_stale(self, project):
        for stage in ("ingest", "code", "dedup", "themes", "audit", "report"):
            project.mark_stage(stage, STATUS_DONE)
        project.mark_stage("dedup", STATUS_DONE)  # re-run
        statuses = project.stage_statuses()
        assert statuses["dedup"] == STATUS_DONE
        assert statuses["themes"] == STATUS_STALE
        assert statuses["audit"] == STATUS_STALE
        assert statuses["report"] == STATUS_STALE
        assert statuses["code"] == STATUS_DONE

    def test_stale_predecessor_blocks(self, project):
        for stage in ("ingest", "code", "dedup", "themes"):
            project.mark_stage(stage, STATUS_DONE)
        project.mark_stage("dedup", STATUS_DONE)
        with pytest.raises(StageOrderError, match="themes"):
            project.check_predecessors("audit")

    def test_mark_downstream_stale_reports_touched(self, project):
        for stage in ("ingest", "code", "dedup", "themes"):
            project.mark_stage(stage, STATUS_DONE)
        touched = project.mark_downstream_stale("dedup")
        assert touched == ["themes"]

    def test_unknown_stage_rejected(self, project):
        with pytest.raises(ProjectError, match="unknown stage"):
            project.check_predecessors("mystery")


class TestLock:
    def test_lock_excludes_second_runner(self, project):
        with project.lock():
            with pytest.raises(ProjectLockedError):
                with project.lock():
                    pass

    def test_lock_released(self, project):
        with project.lock():
            pass
        with project.lock():
            pass


class TestConfigRoundtrip:
    def test_yaml_roundtrip(self, tmp_path):
        project = init_project(
            tmp_path / "p",
            overrides={"themes_n": 8, "coreq_overrides": {26: "custom"}, "description_words": (10, 50)},
            copy_prompts=False,
        )
        reloaded = Project(tmp_path / "p")
        assert reloaded.config.themes_n == 8
        assert reloaded.config.coreq_overrides == {26: "custom"}
        assert reloaded.config.description_words == (10, 50)

    def test_unknown_keys_rejected(self, tmp_path):
        project_dir = tmp_path / "p"
        init_project(project_dir, copy_prompts=False)
        config = project_dir / "project.yaml"
        config.write_text(config.read_text() + "\nbogus_key: 1\n")
        with pytest.raises(ProjectError, match="bogus_key"):
            Project(project_dir)
