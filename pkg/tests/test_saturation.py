from __future__ import annotations

import json
import math
import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FakeGateway
from themeloom.coding import CodeSet, InitialCode
from themeloom.gateway import GenerationParams
from themeloom.saturation import (
    LlmOracle,
    RecordedOracle,
    StringEqualityOracle,
    UniqueCode,
    compare_codes,
    expected_rounds,
    merge_lists,
    run_tournament,
    saturation_ratio,
)

PARAMS = GenerationParams.coding_defaults("test-model")


class AllFalseOracle:
    kind = "recorded"
    params = None

    def compare(self, target, candidates):
        return {c.uid: False for c in candidates}


def build_codesets(names_per_doc: list[list[str]]) -> list[CodeSet]:
    """One CodeSet per name list; quotes are unique per initial code."""
    codesets = []
    for d, names in enumerate(names_per_doc):
        doc_id = f"doc{d:02d}"
        codes = [
            InitialCode(
                code_name=name,
                description=f"description of {name}",
                quote=f"quote {doc_id}-{i}",
                source_doc=doc_id,
                index=i,
            )
            for i, name in enumerate(names)
        ]
        codesets.append(CodeSet(source_doc=doc_id, codes=codes, params_used=PARAMS))
    return codesets


def brute_force_union(names_per_doc: list[list[str]]) -> Counter:
    """Independent oracle: global grouping by canonical name, counting quotes."""
    counter: Counter = Counter()
    for names in names_per_doc:
        for name in names:
            counter[name.strip().casefold()] += 1
    return counter


def unique(name, quote="q", doc="d", index=0, description="desc"):
    return UniqueCode(
        code_name=name,
        description=description,
        quotes=[(quote, doc)],
        members=[f"{doc}:{index}"],
    )


class TestSaturationRatio:
    def test_known_ratios(self):
        assert saturation_ratio(146, 52) == pytest.approx(52 / 146, abs=1e-12)
        assert saturation_ratio(115, 49) == pytest.approx(49 / 115, abs=1e-12)
        assert saturation_ratio(273, 84) == pytest.approx(84 / 273, abs=1e-12)

    def test_identity(self):
        assert saturation_ratio(7, 7) == 1.0

    @pytest.mark.parametrize("total,unique_n", [(10, 0), (5, 6), (0, 0)])
    def test_precondition(self, total, unique_n):
        with pytest.raises(ValueError):
            saturation_ratio(total, unique_n)


class TestCompareCodes:
    def test_string_equality_identical(self):
        oracle = StringEqualityOracle()
        target = unique("Same Name", index=0)
        cand = unique("Same Name", doc="e", index=0)
        assert compare_codes(target, [cand], oracle) == {cand.uid: True}

    def test_string_equality_disjoint(self):
        oracle = StringEqualityOracle()
        target = unique("Alpha")
        cands = [unique("Beta", doc="e"), unique("Gamma", doc="f")]
        assert compare_codes(target, cands, oracle) == {c.uid: False for c in cands}

    def test_recorded_verdicts(self):
        target = unique("T", doc="t")
        c1, c2, c3 = (unique(f"C{i}", doc=f"c{i}") for i in range(3))
        oracle = RecordedOracle({(target.uid, c1.uid): True})
        result = compare_codes(target, [c1, c2, c3], oracle)
        assert result == {c1.uid: True, c2.uid: False, c3.uid: False}

    def test_empty_candidates_rejected(self):
        with pytest.raises(ValueError):
            compare_codes(unique("T"), [], StringEqualityOracle())


class TestLlmOracle:
    def test_parses_comparisons(self):
        gw = FakeGateway(json.dumps({"comparisons": {"code_0": True, "code_1": False}}))
        oracle = LlmOracle(gw, PARAMS)
        target = unique("T", doc="t")
        c0, c1 = unique("A", doc="a"), unique("B", doc="b")
        assert oracle.compare(target, [c0, c1]) == {c0.uid: True, c1.uid: False}

    def test_batching(self):
        responses = [
            json.dumps({"comparisons": {f"code_{i}": False for i in range(2)}}),
            json.dumps({"comparisons": {"code_0": True}}),
        ]
        gw = FakeGateway(*responses)
        oracle = LlmOracle(gw, PARAMS, batch_size=2)
        target = unique("T", doc="t")
        cands = [unique(f"C{i}", doc=f"c{i}") for i in range(3)]
        result = oracle.compare(target, cands)
        assert len(gw.requests) == 2
        assert result[cands[2].uid] is True

    def test_malformed_batch_degrades_to_all_false(self):
        gw = FakeGateway("not json", "still not json")
        oracle = LlmOracle(gw, PARAMS)
        target = unique("T", doc="t")
        cands = [unique("A", doc="a")]
        assert oracle.compare(target, cands) == {cands[0].uid: False}

    def test_string_booleans_accepted(self):
        gw = FakeGateway(json.dumps({"comparisons": {"code_0": "True"}}))
        oracle = LlmOracle(gw, PARAMS)
        target = unique("T", doc="t")
        cand = unique("A", doc="a")
        assert oracle.compare(target, [cand])[cand.uid] is True


class TestMergeLists:
    def test_empty_b_identity(self):
        a = [unique("A")]
        merged, decisions = merge_lists(a, [], StringEqualityOracle())
        assert [c.to_dict() for c in merged] == [c.to_dict() for c in a]
        assert decisions == []

    def test_duplicate_merges_with_one_true_decision(self):
        a = [unique("Same", quote="qa", doc="a")]
        b = [unique("Same", quote="qb", doc="b")]
        merged, decisions = merge_lists(a, b, StringEqualityOracle())
        assert len(merged) == 1
        assert len(merged[0].quotes) == 2
        assert merged[0].members == ["a:0", "b:0"]
        true_decisions = [d for d in decisions if d.verdict]
        assert len(true_decisions) == 1

    def test_keeps_earlier_name_and_description(self):
        a = [unique("Same", description="first wording", doc="a")]
        b = [unique("same", description="second wording", doc="b")]
        merged, _ = merge_lists(a, b, StringEqualityOracle())
        assert merged[0].code_name == "Same"
        assert merged[0].description == "first wording"

    def test_first_match_lowest_index(self):
        a = [unique("X", doc="a", index=0), unique("X", doc="a", index=1)]
        b = [unique("X", doc="b")]
        # a is not internally duplicate-free here, but first-match must pick a[0]
        merged, decisions = merge_lists(a, b, StringEqualityOracle())
        applied = [d for d in decisions if d.verdict]
        assert len(applied) == 1
        assert applied[0].matched == "a:0"
        assert len(merged) == 2

    def test_derived_cross_duplicate_case(self):
        # 5 + 5 names with exactly 2 cross-duplicates; expected output computed
        # by the independent set-union-over-names oracle.
        a_names = ["n0", "n1", "n2", "n3", "n4"]
        b_names = ["n3", "n4", "n5", "n6", "n7"]
        expected = brute_force_union([a_names, b_names])
        a = [unique(n, doc="a", index=i, quote=f"qa{i}") for i, n in enumerate(a_names)]
        b = [unique(n, doc="b", index=i, quote=f"qb{i}") for i, n in enumerate(b_names)]
        merged, _ = merge_lists(a, b, StringEqualityOracle())
        assert len(merged) == len(expected) == 8
        assert sum(len(c.quotes) for c in merged) == 10
        assert Counter({c.code_name: len(c.quotes) for c in merged}) == expected

    def test_decisions_stop_at_first_match(self):
        a = [unique("Miss", doc="a", index=0), unique("Hit", doc="a", index=1), unique("Never", doc="a", index=2)]
        b = [unique("Hit", doc="b")]
        _, decisions = merge_lists(a, b, StringEqualityOracle())
        assert [d.matched for d in decisions] == ["a:0", "a:1"]
        assert [d.verdict for d in decisions] == [False, True]


class TestTournament:
    def test_single_codeset_trivial(self):
        codesets = build_codesets([["a", "b", "c"]])
        uniques, report, decisions = run_tournament(codesets, AllFalseOracle())
        assert len(uniques) == 3
        assert report.ratio == 1.0
        assert report.rounds == 0
        assert report.per_round_sizes == [3]

    def test_four_lists_match_brute_force(self):
        plan = [["a", "b"], ["b", "c"], ["c", "d"], ["a", "d"]]
        expected = brute_force_union(plan)
        uniques, report, _ = run_tournament(build_codesets(plan), StringEqualityOracle())
        assert report.rounds == 2
        assert Counter({c.code_name: len(c.quotes) for c in uniques}) == expected

    def test_quote_conservation_with_rationales(self):
        plan = [["a", "b", "a"], ["b", "c"]]
        codesets = build_codesets(plan)
        uniques, report, decisions = run_tournament(
            codesets, StringEqualityOracle(), rationale_fn=lambda x, y: "merged: same meaning"
        )
        assert sum(len(c.quotes) for c in uniques) == 5
        assert report.total_codes == 5
        applied = [d for d in decisions if d.verdict]
        assert all(d.rationale == "merged: same meaning" for d in applied)
        merged_code = next(c for c in uniques if len(c.members) > 1)
        assert merged_code.merge_rationales

    def test_self_merge_round_zero(self):
        plan = [["dup", "dup"]]
        uniques, report, decisions = run_tournament(build_codesets(plan), StringEqualityOracle())
        assert len(uniques) == 1
        assert len(uniques[0].quotes) == 2
        assert [d.round for d in decisions] == [0]

    def test_lineage_completeness(self):
        plan = [["a", "b"], ["a", "c"], ["b", "c", "d"]]
        codesets = build_codesets(plan)
        uniques, _, _ = run_tournament(codesets, StringEqualityOracle())
        all_members = [m for u in uniques for m in u.members]
        expected = [c.ref for cs in codesets for c in cs.codes]
        assert sorted(all_members) == sorted(expected)

    def test_empty_codesets_rejected(self):
        with pytest.raises(ValueError):
            run_tournament([], StringEqualityOracle())

    def test_applied_true_decisions_in_exactly_one_lineage(self):
        plan = [["a", "b"], ["a", "b"], ["a", "c"]]
        uniques, _, decisions = run_tournament(build_codesets(plan), StringEqualityOracle())
        lineages = {u.uid: set(u.members) for u in uniques}
        for decision in decisions:
            if not decision.verdict:
                continue
            holders = [uid for uid, members in lineages.items() if decision.target in members]
            assert len(holders) == 1


def random_plan(rng: random.Random) -> list[list[str]]:
    n_lists = rng.randint(1, 16)
    vocab = [f"name{i}" for i in range(rng.randint(1, 12))]
    return [
        [rng.choice(vocab) for _ in range(rng.randint(0, 6))] for _ in range(n_lists)
    ]


class TestTournamentProperties:
    def test_bulk_random_properties(self):
        rng = random.Random(2026)
        cases = 0
        while cases < 500:
            plan = random_plan(rng)
            if sum(len(names) for names in plan) == 0:
                continue
            cases += 1
            codesets = build_codesets(plan)
            total = sum(len(names) for names in plan)

            uniques, report, _ = run_tournament(codesets, StringEqualityOracle())
            # (a) quote conservation
            assert sum(len(c.quotes) for c in uniques) == total
            # (c) equality oracle output equals the global set-union by name
            assert Counter({c.code_name.strip().casefold(): len(c.quotes) for c in uniques}) == brute_force_union(plan)
            # (d) round count
            assert report.rounds == expected_rounds(len(plan))
            assert expected_rounds(len(plan)) == (0 if len(plan) <= 1 else math.ceil(math.log2(len(plan))))

            # (b) the all-false oracle keeps every code separate
            uniques_ff, report_ff, _ = run_tournament(codesets, AllFalseOracle())
            assert report_ff.ratio == 1.0
            assert all(len(c.members) == 1 for c in uniques_ff)

    @given(
        plan=st.lists(
            st.lists(st.sampled_from(["x", "y", "z", "w"]), max_size=5),
            min_size=1,
            max_size=9,
        ).filter(lambda p: sum(len(x) for x in p) > 0)
    )
    @settings(max_examples=80, deadline=None)
    def test_monotonicity(self, plan):
        codesets = build_codesets(plan)
        uniques, report, _ = run_tournament(codesets, StringEqualityOracle())
        assert len(uniques) <= report.total_codes
        assert report.per_round_sizes == sorted(report.per_round_sizes, reverse=True)
        assert 0 < report.ratio <= 1
