import pytest
from hypothesis import given, strategies as st

from cmaug.corpus import EmptyCorpus
from cmaug.records import PROVENANCE_MT, SentenceRecord
from cmaug.translate import (
    TranslationError,
    WordMapTranslator,
    convert_corpus,
    plan_spans,
    random_translate,
)


class UppercaseTranslator:
    def translate(self, text, src, dst):
        return text.upper()


class FailOn:
    def __init__(self, bad_ids):
        self.bad = bad_ids
        self.inner = UppercaseTranslator()
        self.seen = 0

    def translate(self, text, src, dst):
        self.seen += 1
        if self.seen in self.bad:
            raise TranslationError("boom")
        return self.inner.translate(text, src, dst)


def rec(text, id="m1", label="positive"):
    return SentenceRecord(id=id, text=text, label=label)


class TestPlanSpans:
    @given(st.integers(1, 30), st.floats(0, 1), st.integers(0, 100))
    def test_span_invariants(self, n, ratio, seed):
        plan = plan_spans("s", n, ratio, seed)
        covered = 0
        prev_end = 0
        for start, end in plan.spans:
            assert 0 <= start < end <= n
            assert start >= prev_end
            prev_end = end
            covered += end - start
        assert abs(covered - ratio * n) <= 1

    @given(st.integers(1, 30), st.floats(0, 1), st.integers(0, 100))
    def test_per_token_mode(self, n, ratio, seed):
        plan = plan_spans("s", n, ratio, seed, per_token=True)
        covered = sum(end - start for start, end in plan.spans)
        assert abs(covered - ratio * n) <= 1
        if covered < n:  # full cover collapses to a single span
            assert all(end - start == 1 for start, end in plan.spans)

    def test_deterministic(self):
        assert plan_spans("s", 20, 0.5, 7) == plan_spans("s", 20, 0.5, 7)

    def test_bad_ratio(self):
        with pytest.raises(ValueError):
            plan_spans("s", 5, 1.5, 0)


class TestRandomTranslate:
    def test_ratio_zero_identity(self):
        record = rec("hello there my friend")
        out = random_translate(record, 0.0, seed=1, mt=UppercaseTranslator())
        assert out.text == record.text
        assert out.provenance == PROVENANCE_MT

    def test_ratio_one_full_cover(self):
        out = random_translate(rec("a b c"), 1.0, seed=1, mt=UppercaseTranslator())
        assert out.text == "A B C"

    def test_half_ratio_uppercases_half(self):
        record = rec("i love this song so much")
        out = random_translate(record, 0.5, seed=3, mt=UppercaseTranslator())
        upper = sum(1 for tok in out.text.split() if tok.isupper())
        assert upper == 3
        assert out.text != record.text

    def test_lineage_preserved(self):
        record = rec("uno dos tres", id="src-9", label="negative")
        out = random_translate(record, 0.5, seed=0, mt=UppercaseTranslator())
        assert out.id == "src-9#mt"
        assert out.label == "negative"
        assert out.meta["source_id"] == "src-9"

    def test_word_map_translator(self):
        mt = WordMapTranslator({"love": "amo", "song": "cancion"})
        out = random_translate(rec("love this song"), 1.0, seed=0, mt=mt)
        assert out.text == "amo this cancion"


class TestConvertCorpus:
    def make(self, n=10):
        return [rec(f"token one two three four {i}", id=f"m{i}",
                    label=["positive", "negative", "neutral"][i % 3])
                for i in range(n)]

    def test_bijective_conversion(self):
        out, skipped = convert_corpus(self.make(), seed=1, mt=UppercaseTranslator())
        assert len(out) == 10 and skipped == 0
        assert all(r.provenance == PROVENANCE_MT for r in out)

    def test_labels_preserved(self):
        records = self.make()
        out, _ = convert_corpus(records, seed=1, mt=UppercaseTranslator())
        assert sorted(r.label for r in out) == sorted(r.label for r in records)

    def test_failure_skipped_and_counted(self):
        out, skipped = convert_corpus(self.make(), seed=1, mt=FailOn({3}))
        assert len(out) == 9 and skipped == 1

    def test_determinism(self):
        a, _ = convert_corpus(self.make(), seed=5, mt=UppercaseTranslator())
        b, _ = convert_corpus(self.make(), seed=5, mt=UppercaseTranslator())
        assert [r.to_json() for r in a] == [r.to_json() for r in b]

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpus):
            convert_corpus([], seed=0, mt=UppercaseTranslator())

    def test_output_order_matches_input(self):
        records = self.make()
        out, _ = convert_corpus(records, seed=2, mt=UppercaseTranslator())
        assert [r.meta["source_id"] for r in out] == [r.id for r in records]
