import io
import json

import numpy as np
import pytest

from stylener.corpus import (
    BioTag,
    BioValidationError,
    ConllFormatError,
    CorpusError,
    FewShotSpec,
    NerCorpus,
    ParallelPair,
    TaggedSentence,
    TypeRegistry,
    augment_entity_replacement,
    entity_spans,
    filter_by_linearized_length,
    linearized_length,
    read_conll,
    read_pairs_jsonl,
    sample_few_shot,
    sample_low_resource,
    write_conll,
    write_pairs_jsonl,
)

from .conftest import random_corpus, random_sentence


def sent(tokens, tags):
    return TaggedSentence(tuple(tokens), tuple(BioTag.from_string(t) for t in tags))


class TestBioTag:
    def test_round_trip(self):
        for text in ("O", "B-PER", "I-ORG"):
            assert str(BioTag.from_string(text)) == text

    def test_rejects_bad_strings(self):
        for bad in ("", "X-PER", "B-", "B", "b-PER", "O-PER"):
            with pytest.raises(CorpusError):
                BioTag.from_string(bad)

    def test_o_carries_no_type(self):
        with pytest.raises(CorpusError):
            BioTag("O", "PER")


class TestTaggedSentence:
    def test_rejects_orphan_continuation(self):
        with pytest.raises(BioValidationError):
            sent(["a", "b"], ["O", "I-PER"])

    def test_rejects_type_switch_inside_span(self):
        with pytest.raises(BioValidationError):
            sent(["a", "b"], ["B-PER", "I-ORG"])

    def test_rejects_whitespace_tokens(self):
        with pytest.raises(CorpusError):
            sent(["a b"], ["O"])
        with pytest.raises(CorpusError):
            sent([""], ["O"])

    def test_entity_spans_end_exclusive(self):
        s = sent(["x", "y", "z"], ["B-PER", "I-PER", "O"])
        assert entity_spans(s) == [(0, 2, "PER")]

    def test_b_after_b_starts_new_span(self):
        s = sent(["x", "y"], ["B-PER", "B-PER"])
        assert entity_spans(s) == [(0, 1, "PER"), (1, 2, "PER")]


class TestConllIo:
    def test_round_trip_random_corpora(self, registry, rng):
        for _ in range(25):
            corpus = random_corpus(rng, registry, int(rng.integers(1, 8)))
            buf = io.StringIO()
            write_conll(corpus, buf)
            back = read_conll(io.StringIO(buf.getvalue()), registry)
            assert back.sentences == corpus.sentences

    def test_read_three_sentence_file(self, registry):
        text = "a\tB-PER\nb\tI-PER\n\nc\tO\n\nd\tB-LOC\n"
        corpus = read_conll(io.StringIO(text), registry)
        assert len(corpus) == 3
        buf = io.StringIO()
        write_conll(corpus, buf)
        assert buf.getvalue() == text

    def test_space_separated_accepted(self, registry):
        corpus = read_conll(io.StringIO("a B-PER\n"), registry)
        assert corpus.sentences[0].tags[0] == BioTag("B", "PER")

    def test_error_carries_line_number(self, registry):
        with pytest.raises(ConllFormatError) as err:
            read_conll(io.StringIO("a\tO\nbad line with spaces extra\n"), registry)
        assert err.value.line_number == 2

    def test_unknown_type_strict_vs_lax(self):
        text = "a\tB-WEIRDO\n"
        with pytest.raises(ConllFormatError):
            read_conll(io.StringIO(text), TypeRegistry(("PER",)), strict_types=True)
        corpus = read_conll(io.StringIO(text), TypeRegistry(("PER",)), strict_types=False)
        assert "WEIRDO" in corpus.types

    def test_orphan_i_rejected_with_line(self, registry):
        with pytest.raises(ConllFormatError):
            read_conll(io.StringIO("a\tI-PER\n"), registry)


class TestPairsJsonl:
    def test_round_trip(self, registry, rng):
        pairs = [
            ParallelPair(random_sentence(rng, registry), random_sentence(rng, registry), True)
            for _ in range(10)
        ]
        buf = io.StringIO()
        write_pairs_jsonl(pairs, buf)
        back = read_pairs_jsonl(io.StringIO(buf.getvalue()), registry)
        assert back == pairs

    def test_records_are_sorted_json(self, registry, rng):
        buf = io.StringIO()
        write_pairs_jsonl([ParallelPair(random_sentence(rng, registry),
                                        random_sentence(rng, registry))], buf)
        record = json.loads(buf.getvalue())
        assert list(record) == sorted(record)

    def test_bad_json_carries_line_number(self):
        with pytest.raises(ConllFormatError) as err:
            read_pairs_jsonl(io.StringIO('{"source_tokens": ["a"]}\nnot json\n'))
        assert err.value.line_number in (1, 2)


class TestFewShot:
    def test_counts_within_k_and_2k(self, registry, rng):
        corpus = random_corpus(rng, registry, 500)
        out = sample_few_shot(corpus, FewShotSpec(k=10, seed=4))
        counts = {t: 0 for t in registry}
        for s in out.sentences:
            for _, _, t in entity_spans(s):
                counts[t] += 1
        for t, c in counts.items():
            assert 10 <= c <= 20, (t, c)

    def test_deterministic(self, registry, rng):
        corpus = random_corpus(rng, registry, 300)
        a = sample_few_shot(corpus, FewShotSpec(k=5, seed=9))
        b = sample_few_shot(corpus, FewShotSpec(k=5, seed=9))
        assert a.sentences == b.sentences

    def test_impossible_raises_with_class_name(self, registry):
        only_per = NerCorpus(
            (sent(["a"], ["B-PER"]),), "source", registry
        )
        with pytest.raises(CorpusError, match="ORG|LOC"):
            sample_few_shot(only_per, FewShotSpec(k=2, seed=0))

    def test_subset_of_input(self, registry, rng):
        corpus = random_corpus(rng, registry, 400)
        out = sample_few_shot(corpus, FewShotSpec(k=8, seed=1))
        pool = set(corpus.sentences)
        assert all(s in pool for s in out.sentences)


class TestLowResource:
    def test_size_and_subset_no_duplicates(self, registry, rng):
        corpus = random_corpus(rng, registry, 200)
        out = sample_low_resource(corpus, 64, seed=2)
        assert len(out) == 64
        assert len(set(out.sentences)) in (64, len({*out.sentences}))
        pool = list(corpus.sentences)
        for s in out.sentences:
            pool.remove(s)  # raises if some sentence repeats beyond supply

    def test_out_of_range(self, registry, rng):
        corpus = random_corpus(rng, registry, 5)
        with pytest.raises(CorpusError):
            sample_low_resource(corpus, 6)
        with pytest.raises(CorpusError):
            sample_low_resource(corpus, 0)

    def test_original_order_kept(self, registry):
        # unique sentences so positions are unambiguous
        sents = tuple(sent([f"w{i}"], ["O"]) for i in range(100))
        corpus = NerCorpus(sents, "source", registry)
        out = sample_low_resource(corpus, 30, seed=3)
        positions = [sents.index(s) for s in out.sentences]
        assert positions == sorted(positions)
        assert len(set(positions)) == 30


class TestLengthFilter:
    def test_linearized_length_formula(self, registry, rng):
        for _ in range(50):
            s = random_sentence(rng, registry)
            assert linearized_length(s) == len(s.tokens) + 2 * len(entity_spans(s))

    def test_filter_matches_recount(self, registry, rng):
        corpus = random_corpus(rng, registry, 120, max_len=20)
        kept = filter_by_linearized_length(corpus, 18)
        expect = [s for s in corpus.sentences if linearized_length(s) <= 18]
        assert list(kept.sentences) == expect

    def test_boundary_inclusive(self, registry):
        s = sent(["a", "b"], ["B-PER", "O"])  # rendered length 4
        corpus = NerCorpus((s,), "source", registry)
        assert len(filter_by_linearized_length(corpus, 4)) == 1
        assert len(filter_by_linearized_length(corpus, 3)) == 0

    def test_pairs_need_both_sides(self, registry):
        short = sent(["a"], ["O"])
        long = sent(["a"] * 6, ["O"] * 6)
        pairs = [ParallelPair(short, long), ParallelPair(short, short)]
        kept = filter_by_linearized_length(pairs, 3)
        assert kept == [pairs[1]]


class TestEntityReplacement:
    def test_outputs_bio_valid_and_members_of_inventory(self, registry, rng):
        source = random_corpus(rng, registry, 100, style="source")
        target = random_corpus(rng, registry, 100, style="target")
        inventory = {}
        for s in target.sentences:
            for a, b, t in entity_spans(s):
                inventory.setdefault(t, set()).add(s.tokens[a:b])
        out = augment_entity_replacement(source, target, seed=5)
        assert len(out) == len(source)
        for orig, new in zip(source.sentences, out.sentences):
            spans_new = entity_spans(new)
            assert len(spans_new) == len(entity_spans(orig))
            for (a, b, t), (oa, ob, ot) in zip(spans_new, entity_spans(orig)):
                assert t == ot
                if t in inventory:
                    assert new.tokens[a:b] in inventory[t]

    def test_no_entities_unchanged(self, registry):
        s = sent(["just", "words"], ["O", "O"])
        source = NerCorpus((s,), "source", registry)
        target = NerCorpus((sent(["x"], ["B-PER"]),), "target", registry)
        out = augment_entity_replacement(source, target, seed=0)
        assert out.sentences[0] == s

    def test_single_choice_inventory(self, registry):
        source = NerCorpus((sent(["New", "York", "wins"], ["B-LOC", "I-LOC", "O"]),),
                           "source", registry)
        target = NerCorpus((sent(["Paris"], ["B-LOC"]),), "target", registry)
        out = augment_entity_replacement(source, target, seed=0)
        assert out.sentences[0].tokens == ("Paris", "wins")
        assert [str(t) for t in out.sentences[0].tags] == ["B-LOC", "O"]

    def test_type_missing_from_target_kept(self, registry):
        source = NerCorpus((sent(["Acme"], ["B-ORG"]),), "source", registry)
        target = NerCorpus((sent(["Paris"], ["B-LOC"]),), "target", registry)
        out = augment_entity_replacement(source, target, seed=0)
        assert out.sentences[0] == source.sentences[0]


class TestRegistry:
    def test_rejects_lowercase(self):
        with pytest.raises(CorpusError):
            TypeRegistry(("per",))

    def test_rejects_duplicates(self):
        with pytest.raises(CorpusError):
            TypeRegistry(("PER", "PER"))

    def test_order_preserved(self):
        r = TypeRegistry(("B", "A"))
        assert list(r) == ["B", "A"]
        assert r.index("A") == 1
