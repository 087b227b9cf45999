from __future__ import annotations

import json

import pytest

from conftest import FakeGateway
from themeloom.gateway import GenerationParams
from themeloom.saturation import UniqueCode
from themeloom.theming import (
    ParentTheme,
    Theme,
    ThemeSet,
    generate_hierarchy,
    generate_themes,
    validate_assignment,
    validate_hierarchy,
)

PARAMS = GenerationParams.theming_defaults("test-model")
QUESTION = "How do participants experience the support on offer?"


def make_codes(n: int) -> list[UniqueCode]:
    return [
        UniqueCode(
            code_name=f"code {i}",
            description=f"description {i}",
            quotes=[(f"quote {i}", "doc")],
            members=[f"doc:{i}"],
        )
        for i in range(n)
    ]


def themes_payload(assignments: list[list[int]], key="code_indices") -> str:
    return json.dumps(
        {
            "themes": [
                {"name": f"Theme {k}", "description": f"About group {k}", key: idxs}
                for k, idxs in enumerate(assignments)
            ]
        }
    )


class TestGenerateThemes:
    def test_basic_grouping(self):
        gw = FakeGateway(themes_payload([[0, 1], [2]]))
        ts = generate_themes(gw, make_codes(3), QUESTION, PARAMS)
        assert [t.code_indices for t in ts.themes] == [[0, 1], [2]]
        assert ts.unassigned == []
        assert [t.id for t in ts.themes] == ["T1", "T2"]

    def test_single_code_single_theme(self):
        gw = FakeGateway(themes_payload([[0]]))
        ts = generate_themes(gw, make_codes(1), QUESTION, PARAMS)
        assert len(ts.themes) == 1
        assert ts.unassigned == []

    def test_unassigned_collected(self):
        gw = FakeGateway(themes_payload([[0, 2]]))
        ts = generate_themes(gw, make_codes(5), QUESTION, PARAMS)
        assert ts.unassigned == [1, 3, 4]

    def test_out_of_range_dropped_with_warning(self):
        gw = FakeGateway(themes_payload([[0, 99, -2]]))
        ts = generate_themes(gw, make_codes(2), QUESTION, PARAMS)
        assert ts.themes[0].code_indices == [0]
        assert sum("out-of-range" in w for w in ts.warnings) == 2

    def test_duplicate_within_theme_dropped(self):
        gw = FakeGateway(themes_payload([[0, 0, 1]]))
        ts = generate_themes(gw, make_codes(2), QUESTION, PARAMS)
        assert ts.themes[0].code_indices == [0, 1]
        assert any("duplicate index" in w for w in ts.warnings)

    def test_shared_codes_across_themes_allowed(self):
        gw = FakeGateway(themes_payload([[0, 1], [1, 2]]))
        ts = generate_themes(gw, make_codes(3), QUESTION, PARAMS)
        report = validate_assignment(ts, 3)
        assert report.overlap_count == 1

    def test_prompt_carries_question_and_codes(self):
        gw = FakeGateway(themes_payload([[0]]))
        generate_themes(gw, make_codes(1), QUESTION, PARAMS)
        prompt = gw.requests[0].user_text
        assert QUESTION in prompt
        assert '"code_name": "code 0"' in prompt

    def test_fixed_count_instruction(self):
        gw = FakeGateway(themes_payload([[0]]))
        generate_themes(gw, make_codes(1), QUESTION, PARAMS, n_themes=8)
        assert "exactly 8 themes" in gw.requests[0].user_text
        gw2 = FakeGateway(themes_payload([[0]]))
        generate_themes(gw2, make_codes(1), QUESTION, PARAMS)
        assert "exactly" not in gw2.requests[0].user_text

    def test_empty_codes_rejected(self):
        with pytest.raises(ValueError):
            generate_themes(FakeGateway(), [], QUESTION, PARAMS)

    def test_strict_assign_reprompts_once(self):
        gw = FakeGateway(
            themes_payload([[0]]),
            themes_payload([[1]]),  # corrective reply assigns the leftover
        )
        ts = generate_themes(gw, make_codes(2), QUESTION, PARAMS, strict_assign=True)
        assert len(gw.requests) == 2
        assert ts.unassigned == []

    def test_without_strict_assign_no_reprompt(self):
        gw = FakeGateway(themes_payload([[0]]))
        ts = generate_themes(gw, make_codes(2), QUESTION, PARAMS, strict_assign=False)
        assert len(gw.requests) == 1
        assert ts.unassigned == [1]


class TestHierarchy:
    def test_two_pass_flow(self):
        sub_reply = themes_payload([[0], [1]])
        parent_reply = themes_payload([[0], [1]], key="subtheme_indices")
        gw = FakeGateway(sub_reply, parent_reply)
        hierarchy, warnings = generate_hierarchy(
            gw, make_codes(2), QUESTION, n_sub=2, n_top=2, params=PARAMS
        )
        assert len(gw.requests) == 2
        assert "exactly 2 themes" in gw.requests[0].user_text
        assert "into 2 themes" in gw.requests[1].user_text
        assert len(hierarchy.subthemes) == 2
        assert len(hierarchy.parents) == 2
        assert hierarchy.flags == []

    def test_duplicate_subtheme_flagged(self):
        sub_reply = themes_payload([[i] for i in range(12)])
        assignments = [[0, 10], [1, 2], [3, 4], [5, 6], [7, 8], [9, 10, 11]]
        gw = FakeGateway(sub_reply, themes_payload(assignments, key="subtheme_indices"))
        hierarchy, _ = generate_hierarchy(
            gw, make_codes(12), QUESTION, n_sub=12, n_top=6, params=PARAMS
        )
        assert hierarchy.flags == ["duplicate sub-theme 10"]

    def test_trivial_one_over_one(self):
        gw = FakeGateway(
            themes_payload([[0]]),
            themes_payload([[0]], key="subtheme_indices"),
        )
        hierarchy, _ = generate_hierarchy(
            gw, make_codes(1), QUESTION, n_sub=1, n_top=1, params=PARAMS
        )
        assert len(hierarchy.parents) == 1
        assert hierarchy.flags == []

    def test_invalid_counts_rejected(self):
        with pytest.raises(ValueError):
            generate_hierarchy(FakeGateway(), make_codes(1), QUESTION, 0, 1, PARAMS)

    def test_validate_hierarchy_orphans(self):
        subs = [Theme(f"S{i}", f"s{i}", "d", []) for i in range(3)]
        parents = [ParentTheme("P", "d", [0, 2])]
        assert validate_hierarchy(subs, parents) == ["unassigned sub-theme 1"]


class TestValidateAssignment:
    def test_overlap_arithmetic(self):
        # Eight themes, sizes summing to one more than the code count, zero
        # unassigned: exactly one code sits in two themes.
        sizes = [8, 8, 8, 6, 7, 5, 5, 6]
        indices = iter(range(52))
        themes = []
        for k, size in enumerate(sizes):
            if k == 1:  # theme 2 shares code 0 with theme 1
                mine = [0] + [next(indices) for _ in range(size - 1)]
            else:
                mine = [next(indices) for _ in range(size)]
            themes.append(Theme(f"T{k+1}", f"t{k}", "d", mine))
        ts = ThemeSet(themes=themes, unassigned=[])
        report = validate_assignment(ts, 52)
        assert sum(report.per_theme_sizes.values()) == 53
        assert report.overlap_count == 1
        assert report.unassigned == []
        assert report.distinct_assigned == 52

    def test_unassigned_listed(self):
        themes = [Theme("T1", "t", "d", list(range(45)))]
        ts = ThemeSet(themes=themes, unassigned=[45, 46, 47, 48])
        report = validate_assignment(ts, 49)
        assert report.unassigned == [45, 46, 47, 48]
        assert report.distinct_assigned + len(report.unassigned) == 49

    def test_empty(self):
        report = validate_assignment(ThemeSet(themes=[], unassigned=[]), 0)
        assert report.per_theme_sizes == {}
        assert report.overlap_count == 0
        assert report.distinct_assigned == 0

    def test_out_of_range_reported(self):
        themes = [Theme("T1", "t", "d", [0, 7])]
        report = validate_assignment(ThemeSet(themes=themes, unassigned=[]), 2)
        assert report.out_of_range == [7]
