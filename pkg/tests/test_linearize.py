import pytest

from stylener.corpus import BioTag, TaggedSentence
from stylener.linearize import (
    EntitySegment,
    LinearizedSentence,
    ParseErrorCode,
    PrefixScheme,
    RenderedParseError,
    TextSegment,
    delinearize,
    end_marker,
    linearize,
    marker_type,
    parse_rendered,
    render,
    render_tokens,
    start_marker,
    surface_tokens,
)

from .conftest import random_sentence


def sent(tokens, tags):
    return TaggedSentence(tuple(tokens), tuple(BioTag.from_string(t) for t in tags))


class TestRoundTrip:
    def test_random_sentences(self, registry, rng):
        for _ in range(500):
            s = random_sentence(rng, registry)
            assert delinearize(linearize(s)) == s

    def test_prefix_survives_round_trip(self, registry, rng):
        prefixes = PrefixScheme.default()
        s = random_sentence(rng, registry)
        lin = linearize(s, prefixes.source_to_target)
        assert lin.prefix == prefixes.source_to_target
        assert delinearize(lin) == s

    def test_render_then_parse_equals_linearize(self, registry, rng):
        prefixes = PrefixScheme.default()
        for _ in range(200):
            s = random_sentence(rng, registry)
            lin = linearize(s, prefixes.target_to_source)
            back = parse_rendered(render_tokens(lin), registry, prefixes)
            assert back == lin

    def test_hand_example(self, registry):
        s = sent(["Obama", "visited", "Paris"], ["B-PER", "O", "B-LOC"])
        tokens = render_tokens(linearize(s))
        assert tokens == [
            "<START_PER>", "Obama", "<END_PER>", "visited",
            "<START_LOC>", "Paris", "<END_LOC>",
        ]

    def test_adjacent_spans_stay_separate(self, registry):
        s = sent(["a", "b"], ["B-PER", "B-PER"])
        assert delinearize(linearize(s)) == s
        tokens = render_tokens(linearize(s))
        assert tokens.count("<START_PER>") == 2


class TestMarkers:
    def test_marker_type_recognizes_registered(self, registry):
        assert marker_type("<START_PER>", registry) == ("start", "PER")
        assert marker_type("<END_LOC>", registry) == ("end", "LOC")

    def test_unregistered_marker_is_ordinary(self, registry):
        assert marker_type("<START_THING>", registry) is None
        assert marker_type("<END_>", registry) is None
        assert marker_type("word", registry) is None

    def test_marker_builders(self):
        assert start_marker("ORG") == "<START_ORG>"
        assert end_marker("ORG") == "<END_ORG>"


class TestSegments:
    def test_text_segment_rejects_empty(self):
        with pytest.raises(ValueError):
            TextSegment(())

    def test_entity_segment_rejects_empty(self):
        with pytest.raises(ValueError):
            EntitySegment("PER", ())

    def test_adjacent_text_segments_rejected(self):
        with pytest.raises(ValueError):
            LinearizedSentence((TextSegment(("a",)), TextSegment(("b",))))

    def test_surface_tokens_strip_everything(self, registry):
        s = sent(["Obama", "visited"], ["B-PER", "O"])
        lin = linearize(s, PrefixScheme.default().source_to_target)
        assert surface_tokens(lin) == ["Obama", "visited"]
        assert "transfer" in render(lin)


class TestParseErrors:
    def _err(self, tokens, registry):
        with pytest.raises(RenderedParseError) as err:
            parse_rendered(tokens, registry)
        return err.value

    def test_unclosed_entity(self, registry):
        e = self._err(["<START_PER>", "a"], registry)
        assert e.code is ParseErrorCode.UNCLOSED_ENTITY
        assert e.index == 0

    def test_type_mismatch(self, registry):
        e = self._err(["<START_PER>", "a", "<END_ORG>"], registry)
        assert e.code is ParseErrorCode.TYPE_MISMATCH
        assert e.index == 2

    def test_nested_entity(self, registry):
        e = self._err(["<START_PER>", "<START_ORG>"], registry)
        assert e.code is ParseErrorCode.NESTED_ENTITY
        assert e.index == 1

    def test_empty_entity(self, registry):
        e = self._err(["<START_PER>", "<END_PER>"], registry)
        assert e.code is ParseErrorCode.EMPTY_ENTITY
        assert e.index == 1

    def test_stray_end_marker(self, registry):
        e = self._err(["a", "<END_PER>"], registry)
        assert e.code is ParseErrorCode.STRAY_END_MARKER
        assert e.index == 1

    def test_empty_sentence(self, registry):
        e = self._err([], registry)
        assert e.code is ParseErrorCode.EMPTY_SENTENCE

    def test_prefix_only_is_empty(self, registry):
        prefixes = PrefixScheme.default()
        with pytest.raises(RenderedParseError) as err:
            parse_rendered(list(prefixes.source_to_target.tokens), registry, prefixes)
        assert err.value.code is ParseErrorCode.EMPTY_SENTENCE


class TestRecognizerOracle:
    def test_agreement_on_fuzzed_streams(self, registry, rng):
        from .oracles import marker_regex_recognizer

        prefixes = PrefixScheme.default()
        prefix_lists = [list(prefixes.source_to_target.tokens),
                        list(prefixes.target_to_source.tokens)]
        alphabet = ["a", "b", "<START_PER>", "<END_PER>", "<START_ORG>",
                    "<END_ORG>", "<START_LOC>", "<END_LOC>"]
        agree = disagree = 0
        for _ in range(3000):
            n = int(rng.integers(0, 9))
            tokens = [alphabet[int(rng.integers(len(alphabet)))] for _ in range(n)]
            if rng.random() < 0.3:
                tokens = prefix_lists[int(rng.integers(2))] + tokens
            try:
                parse_rendered(tokens, registry, prefixes)
                ours = True
            except RenderedParseError:
                ours = False
            oracle = marker_regex_recognizer(tokens, list(registry), prefix_lists)
            assert ours == oracle, tokens
            agree += 1
        assert agree == 3000
