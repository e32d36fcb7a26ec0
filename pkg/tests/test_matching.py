from datetime import date

import pytest

from conftest import make_dataset, make_pair, make_record
from mock_servers import MockErrorServer, MockLlmServer
from reclink.blocking import CandidatePairSet
from reclink.errors import ConfigError, TransportError, UnparseableResponse
from reclink.fellegi_sunter import (
    MATCH,
    NONMATCH,
    ClassificationThresholds,
    default_comparators,
)
from reclink.matching import (
    CascadePolicy,
    LlmEndpointConfig,
    match_cascade,
    match_deterministic,
    match_llm,
    match_probabilistic,
    read_decisions_csv,
    write_decisions_csv,
)
from reclink.serialize import render_match_prompt

CONFIG = default_comparators()
BAND = ClassificationThresholds(0.65, 1.0)


def llm_config(url, **overrides):
    return LlmEndpointConfig(url=url, model="test-model", **overrides)


class TestDeterministicMatcher:
    def test_identical_core_fields_match(self):
        decision = match_deterministic(make_pair())
        assert decision.verdict == MATCH
        assert decision.stage == "Deterministic"

    def test_typo_breaks_match(self):
        decision = match_deterministic(make_pair(r_first="JON"))
        assert decision.verdict == NONMATCH

    def test_missing_birth_date_breaks_match(self):
        decision = match_deterministic(make_pair(r_dob=None))
        assert decision.verdict == NONMATCH


class TestProbabilisticMatcher:
    def test_all_agree(self):
        decision = match_probabilistic(make_pair(), CONFIG, cutoff=0.9)
        assert decision.verdict == MATCH
        assert decision.score == 1.0

    def test_all_disagree(self):
        pair = make_pair(
            r_first="XEN", r_middle="Q", r_last="VOR",
            r_dob=date(1999, 9, 9), r_sex="F", r_ssn="111111111",
            r_address="999 NOWHERE",
        )
        decision = match_probabilistic(pair, CONFIG, cutoff=0.9)
        assert decision.verdict == NONMATCH
        assert decision.score == 0.0

    def test_ssn_missing_all_else_agreeing(self):
        # Normalization runs over observed fields only, so the score stays
        # exactly 1.0 with SSN absent.
        decision = match_probabilistic(make_pair(r_ssn=None), CONFIG, cutoff=0.9)
        assert decision.score == 1.0
        assert decision.verdict == MATCH

    def test_cutoff_validated(self):
        with pytest.raises(ConfigError):
            match_probabilistic(make_pair(), CONFIG, cutoff=1.5)


class TestLlmMatcher:
    def test_yes(self):
        with MockLlmServer("Yes") as server:
            decision = match_llm(make_pair(), llm_config(server.url))
        assert decision.verdict == MATCH
        assert decision.raw_response == "Yes"
        assert decision.stage == "Llm"

    def test_no_with_punctuation(self):
        with MockLlmServer("No.") as server:
            decision = match_llm(make_pair(), llm_config(server.url))
        assert decision.verdict == NONMATCH

    def test_case_and_whitespace_insensitive(self):
        with MockLlmServer("  YES, same person") as server:
            decision = match_llm(make_pair(), llm_config(server.url))
        assert decision.verdict == MATCH

    def test_unparseable_retried_then_raised(self):
        with MockLlmServer("Maybe") as server:
            cfg = llm_config(server.url, max_retries=1)
            with pytest.raises(UnparseableResponse) as err:
                match_llm(make_pair(), cfg)
            assert len(server.requests) == 2  # initial call + one retry
        assert err.value.raw == "Maybe"

    def test_http_error_is_transport(self):
        with MockErrorServer(500, {"oops": True}) as server:
            with pytest.raises(TransportError):
                match_llm(make_pair(), llm_config(server.url))

    def test_unreachable_endpoint(self):
        cfg = llm_config("http://127.0.0.1:1/v1/chat", timeout_ms=300)
        with pytest.raises(TransportError):
            match_llm(make_pair(), cfg)

    def test_wire_format_and_prompt_fidelity(self):
        pair = make_pair()
        with MockLlmServer("Yes") as server:
            match_llm(pair, llm_config(server.url))
            request = server.requests[0]
        assert request["model"] == "test-model"
        assert request["temperature"] == 0.0
        assert request["max_tokens"] > 0
        assert request["messages"][0] == {
            "role": "system", "content": "You are a helpful assistant"
        }
        assert request["messages"][1]["role"] == "user"
        assert request["messages"][1]["content"] == render_match_prompt(pair)

    def test_system_prompt_omitted_when_unset(self):
        with MockLlmServer("Yes") as server:
            match_llm(make_pair(), llm_config(server.url, system_prompt=None))
            request = server.requests[0]
        assert [m["role"] for m in request["messages"]] == ["user"]

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            llm_config("http://x", temperature=-0.1)
        with pytest.raises(ConfigError):
            llm_config("http://x", max_retries=-1)


def cascade_fixture():
    """10 candidate pairs: 4 score 1.0, 3 score ~0.13, 3 interior ~0.73."""
    records_a, records_b, truth = [], [], set()

    def add(i, left, right, is_match):
        records_a.append(left)
        records_b.append(right)
        if is_match:
            truth.add((left.record_id, right.record_id))

    idx = 0
    for _ in range(4):  # identical: score exactly 1.0
        add(idx, make_record(f"a{idx}", "A"),
            make_record(f"b{idx}", "B"), True)
        idx += 1
    for _ in range(3):  # sex-only agreement: score ~0.13
        add(idx,
            make_record(f"a{idx}", "A", first="EUGENE", middle=None,
                        last="GOMEZ", dob=date(1970, 1, 1), sex="M",
                        ssn=None, address=None),
            make_record(f"b{idx}", "B", first="EGAN", middle=None,
                        last="GAINES", dob=date(1985, 6, 15), sex="M",
                        ssn=None, address=None), False)
        idx += 1
    for _ in range(3):  # one name disagreement: interior score ~0.73
        add(idx,
            make_record(f"a{idx}", "A", first="ALPHA", middle=None,
                        last="MILLER", dob=date(1970, 1, 1), sex="M",
                        ssn=None, address=None),
            make_record(f"b{idx}", "B", first="OMEGA", middle=None,
                        last="MILLER", dob=date(1970, 1, 1), sex="M",
                        ssn=None, address=None), True)
        idx += 1

    pairs = CandidatePairSet()
    for left, right in zip(records_a, records_b):
        pairs.add(left.record_id, right.record_id, "fixture")
    return (make_dataset(records_a, "A"), make_dataset(records_b, "B"),
            pairs, truth)


class TestCascade:
    def test_llm_called_only_for_interior(self):
        a, b, pairs, truth = cascade_fixture()
        with MockLlmServer(
            lambda prompt: "Yes" if "MILLER" in prompt else "No"
        ) as server:
            policy = CascadePolicy(band=BAND, escalation_target="llm")
            decisions, queued = match_cascade(
                pairs, a, b, policy, CONFIG, llm_cfg=llm_config(server.url)
            )
            assert len(server.requests) == 3  # interior pairs only
        assert len(decisions) == 10
        assert queued == []
        by_key = {(d.left_id, d.right_id): d for d in decisions}
        assert sum(d.verdict == MATCH for d in decisions) == 7
        assert by_key[("a0", "b0")].stage == "Probabilistic"
        assert by_key[("a7", "b7")].stage == "Llm"

    def test_auto_match_without_llm(self):
        a, b, pairs, _ = cascade_fixture()
        with MockLlmServer("No") as server:
            policy = CascadePolicy(band=BAND, escalation_target="llm")
            decisions, _ = match_cascade(
                pairs, a, b, policy, CONFIG, llm_cfg=llm_config(server.url)
            )
            prompts = server.prompts
        by_key = {(d.left_id, d.right_id): d for d in decisions}
        assert by_key[("a0", "b0")].verdict == MATCH
        assert all("ALPHA" in p or "OMEGA" in p for p in prompts)

    def test_human_queue_routing(self):
        a, b, pairs, _ = cascade_fixture()
        policy = CascadePolicy(band=BAND, escalation_target="human_queue")
        decisions, queued = match_cascade(pairs, a, b, policy, CONFIG)
        assert len(decisions) == 7
        assert len(queued) == 3
        decided_keys = {(d.left_id, d.right_id) for d in decisions}
        assert decided_keys.isdisjoint(set(queued))
        assert decided_keys | set(queued) == pairs.keys()

    def test_nonmatch_default_routing(self):
        a, b, pairs, _ = cascade_fixture()
        policy = CascadePolicy(band=BAND, escalation_target="nonmatch_default")
        decisions, queued = match_cascade(pairs, a, b, policy, CONFIG)
        assert len(decisions) == 10 and not queued
        interior = [d for d in decisions if d.left_id in ("a7", "a8", "a9")]
        assert all(d.verdict == NONMATCH for d in interior)

    def test_llm_failure_fails_open_to_queue(self):
        a, b, pairs, _ = cascade_fixture()
        with MockLlmServer("Maybe") as server:
            policy = CascadePolicy(band=BAND, escalation_target="llm")
            decisions, queued = match_cascade(
                pairs, a, b, policy, CONFIG,
                llm_cfg=llm_config(server.url, max_retries=0),
            )
        assert len(decisions) == 7
        assert queued == [("a7", "b7"), ("a8", "b8"), ("a9", "b9")]

    def test_deterministic_across_runs_and_parallelism(self):
        a, b, pairs, _ = cascade_fixture()
        results = []
        for parallelism in (1, 4):
            with MockLlmServer(
                lambda prompt: "Yes" if "MILLER" in prompt else "No"
            ) as server:
                policy = CascadePolicy(band=BAND, escalation_target="llm")
                decisions, queued = match_cascade(
                    pairs, a, b, policy, CONFIG,
                    llm_cfg=llm_config(server.url), parallelism=parallelism,
                )
                results.append((decisions, queued))
        assert results[0] == results[1]

    def test_llm_target_requires_config(self):
        a, b, pairs, _ = cascade_fixture()
        policy = CascadePolicy(band=BAND, escalation_target="llm")
        with pytest.raises(ConfigError):
            match_cascade(pairs, a, b, policy, CONFIG)


def test_decisions_csv_round_trip(tmp_path):
    a, b, pairs, _ = cascade_fixture()
    policy = CascadePolicy(band=BAND, escalation_target="nonmatch_default")
    decisions, _ = match_cascade(pairs, a, b, policy, CONFIG)
    path = tmp_path / "decisions.csv"
    write_decisions_csv(decisions, path)
    assert read_decisions_csv(path) == decisions
