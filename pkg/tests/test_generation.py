from collections import Counter

import pytest

from cmaug import generation as gen
from cmaug.endpoint import GenerationConfig, MockChatEndpoint
from cmaug.generation import (
    DegenerateOutput,
    GenerationAborted,
    GenerationJob,
    InsufficientDemonstrations,
    PromptSpec,
    build_prompt,
    match_label,
    parse_generation,
    run_generation,
    sample_demonstrations,
    zero_shot_predict,
)
from cmaug.records import CLASSES, PROVENANCE_LLM, SentenceRecord


class TestSampleDemonstrations:
    def test_exact_division(self, train_pool):
        demos = sample_demonstrations(train_pool, 15, seed=0)
        assert Counter(d.label for d in demos) == {c: 5 for c in CLASSES}

    def test_round_robin_remainder(self, train_pool):
        demos = sample_demonstrations(train_pool, 50, seed=3)
        counts = Counter(d.label for d in demos)
        assert sorted(counts.values()) == [16, 17, 17]

    def test_insufficient_class(self):
        pool = [SentenceRecord(f"p{i}", "x", "positive") for i in range(10)]
        pool += [SentenceRecord(f"u{i}", "x", "neutral") for i in range(10)]
        pool += [SentenceRecord(f"n{i}", "x", "negative") for i in range(3)]
        with pytest.raises(InsufficientDemonstrations) as exc:
            sample_demonstrations(pool, 15, seed=0)
        assert exc.value.cls == "negative"

    def test_without_replacement(self, train_pool):
        demos = sample_demonstrations(train_pool, 30, seed=1)
        assert len({d.id for d in demos}) == 30

    def test_deterministic(self, train_pool):
        a = sample_demonstrations(train_pool, 15, seed=5)
        b = sample_demonstrations(train_pool, 15, seed=5)
        assert [d.id for d in a] == [d.id for d in b]


class TestBuildPrompt:
    def test_appendix_token_arithmetic(self, train_pool):
        # counter reporting 330 for the instruction and 20.8 per demo line
        spec = PromptSpec(shots=15)
        demos = sample_demonstrations(train_pool, 15, seed=0)
        instruction = spec.instruction.format(batch_size=spec.batch_size)
        counter = lambda text: 330.0 if text == instruction else 20.8
        _, estimate = build_prompt(spec, demos, token_counter=counter)
        assert estimate == pytest.approx(642.0)

    def test_zero_shot_prompt_is_instruction_only(self):
        spec = PromptSpec(shots=0)
        prompt, _ = build_prompt(spec, [])
        assert prompt == spec.instruction.format(batch_size=spec.batch_size)

    def test_deterministic(self, train_pool):
        spec = PromptSpec(shots=9)
        demos = sample_demonstrations(train_pool, 9, seed=2)
        assert build_prompt(spec, demos) == build_prompt(spec, demos)

    def test_demos_rendered_one_per_line(self, train_pool):
        spec = PromptSpec(shots=3)
        demos = sample_demonstrations(train_pool, 3, seed=0)
        prompt, _ = build_prompt(spec, demos)
        for demo in demos:
            assert f"{demo.text} ||| {demo.label}" in prompt.splitlines()


class TestParseGeneration:
    def test_well_formed(self):
        accepted, rejected = parse_generation(
            "Hola this movie was amazing ||| positive"
        )
        assert accepted == [("Hola this movie was amazing", "positive")]
        assert rejected == []

    def test_missing_delimiter_rejected(self):
        accepted, rejected = parse_generation("just some chatter with no separator")
        assert accepted == []
        assert rejected == ["just some chatter with no separator"]

    def test_enumeration_and_case(self):
        accepted, _ = parse_generation("3. Qué lata, terrible service ||| Negative")
        assert accepted == [("Qué lata, terrible service", "negative")]

    def test_dash_enumeration(self):
        accepted, _ = parse_generation("- todo bien hoy ||| Neutral")
        assert accepted == [("todo bien hoy", "neutral")]

    def test_unknown_label_rejected(self):
        accepted, rejected = parse_generation("some text ||| ecstatic")
        assert accepted == [] and len(rejected) == 1

    def test_empty_text_rejected(self):
        accepted, rejected = parse_generation(" ||| positive")
        assert accepted == [] and len(rejected) == 1

    def test_blank_lines_ignored(self):
        accepted, rejected = parse_generation("\n\na ok ||| positive\n\n")
        assert len(accepted) == 1 and rejected == []


class TestRunGeneration:
    def test_exact_request_count_when_clean(self, train_pool):
        job = GenerationJob(target_size=1000, seed=42)
        records = run_generation(
            job, PromptSpec(shots=15), GenerationConfig(), train_pool,
            MockChatEndpoint(seed=7),
        )
        assert job.requests_sent == 20
        assert job.produced == len(records) == 1000
        assert job.rejected_lines == 0

    def test_overshoot_truncated(self, train_pool):
        job = GenerationJob(target_size=120, seed=0)
        records = run_generation(
            job, PromptSpec(shots=9, batch_size=50), GenerationConfig(parallelism=1),
            train_pool, MockChatEndpoint(seed=1),
        )
        assert job.requests_sent == 3
        assert len(records) == 120

    def test_malformed_lines_still_reach_target(self, train_pool):
        job = GenerationJob(target_size=1000, seed=42)
        records = run_generation(
            job, PromptSpec(shots=15), GenerationConfig(), train_pool,
            MockChatEndpoint(seed=7, malformed_rate=0.1),
        )
        assert job.produced == 1000
        assert job.rejected_lines > 0
        assert job.requests_sent > 20

    def test_replay_byte_identical(self, train_pool):
        def run():
            job = GenerationJob(target_size=300, seed=11)
            records = run_generation(
                job, PromptSpec(shots=15), GenerationConfig(), train_pool,
                MockChatEndpoint(seed=3, malformed_rate=0.1),
            )
            return b"".join(r.to_json().encode() + b"\n" for r in records)

        assert run() == run()

    def test_provenance_and_labels(self, train_pool):
        job = GenerationJob(target_size=100, seed=5)
        records = run_generation(
            job, PromptSpec(shots=9), GenerationConfig(), train_pool,
            MockChatEndpoint(seed=2),
        )
        assert all(r.provenance == PROVENANCE_LLM for r in records)
        assert all(r.label in CLASSES for r in records)
        assert len({r.id for r in records}) == len(records)

    def test_token_usage_monotone(self, train_pool):
        job = GenerationJob(target_size=200, seed=5)
        run_generation(
            job, PromptSpec(shots=9), GenerationConfig(), train_pool,
            MockChatEndpoint(seed=2),
        )
        assert job.token_usage[0] > 0 and job.token_usage[1] > 0

    def test_degenerate_output_circuit_breaker(self, train_pool):
        job = GenerationJob(target_size=100_000, seed=0)
        with pytest.raises(DegenerateOutput):
            run_generation(
                job, PromptSpec(shots=9), GenerationConfig(parallelism=1),
                train_pool, MockChatEndpoint(seed=0, malformed_rate=0.95),
            )

    def test_endpoint_failure_aborts_with_partials(self, train_pool):
        endpoint = MockChatEndpoint(seed=0, fail_every=3)
        job = GenerationJob(target_size=500, seed=0)
        config = GenerationConfig(parallelism=1, max_retries=0)
        with pytest.raises(GenerationAborted) as exc:
            run_generation(job, PromptSpec(shots=9), config, train_pool, endpoint)
        assert len(exc.value.partial) > 0

    def test_rejected_text_never_in_output(self, train_pool):
        job = GenerationJob(target_size=200, seed=9)
        records = run_generation(
            job, PromptSpec(shots=9), GenerationConfig(), train_pool,
            MockChatEndpoint(seed=4, malformed_rate=0.2),
        )
        # malformed mock lines carry no delimiter; every kept record parsed cleanly
        assert all("|||" not in r.text for r in records)


class TestZeroShot:
    def test_exact_label(self):
        assert match_label("negative") == "negative"

    def test_substring_rule(self):
        assert match_label("I think this is Positive.") == "positive"

    def test_ambiguous_is_invalid(self):
        assert match_label("both positive and negative here") is None

    def test_no_label_is_invalid(self):
        assert match_label("both good and bad") is None

    def test_predictions_one_per_record(self, train_pool):
        preds = zero_shot_predict(
            train_pool[:10], GenerationConfig(), MockChatEndpoint(seed=0)
        )
        assert len(preds) == 10
        assert all(p in CLASSES or p == "invalid" for p in preds)

    def test_empty_records_rejected(self):
        with pytest.raises(ValueError):
            zero_shot_predict([], GenerationConfig(), MockChatEndpoint(seed=0))
