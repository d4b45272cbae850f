import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asrlab.text import (
    BEGIN,
    END,
    PAD,
    SPECIALS,
    UNK,
    GraphemeVocab,
    build_vocab,
    graphemes,
    normalize_text,
)


def corpus(*texts, lang="xx"):
    return [(lang, t) for t in texts]


class TestBuild:
    def test_specials_reserved(self):
        v = build_vocab(corpus("abc"), min_count=1)
        assert v.tokens[:4] == SPECIALS
        assert (BEGIN, END, PAD, UNK) == (0, 1, 2, 3)

    def test_min_count_two(self):
        v = build_vocab(corpus("aab", "ab"), min_count=2)
        # a:3 b:2, both qualify
        assert len(v) == 6
        assert v.id_of("a") == 4
        assert v.id_of("b") == 5

    def test_min_count_three_drops_b(self):
        # a:3 b:2 -> only a clears the bar, b encodes as unknown
        v = build_vocab(corpus("aab", "ab"), min_count=3)
        assert "a" in v.tokens and "b" not in v.tokens
        ids = v.encode("ab")
        assert ids == [BEGIN, v.id_of("a"), UNK, END]

    def test_min_count_one_full_coverage(self):
        texts = ["hello world", "धन्यवाद", "你好"]
        v = build_vocab(corpus(*texts), min_count=1)
        for t in texts:
            assert UNK not in v.encode(t)

    def test_frequency_then_codepoint_order(self):
        v = build_vocab(corpus("bbb", "aa", "cc"), min_count=1)
        assert v.tokens[4:] == ("b", "a", "c")

    def test_order_independent(self):
        a = build_vocab(corpus("xyz", "zzy"), 1)
        b = build_vocab(corpus("zzy", "xyz"), 1)
        assert a.tokens == b.tokens

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            build_vocab([], min_count=1)

    def test_grapheme_clusters_not_codepoints(self):
        # combining acute: one cluster, two codepoints
        text = "éé"
        assert graphemes(text) == ["é", "é"]
        v = build_vocab(corpus(text), min_count=2)
        assert "é" in v.tokens
        assert "e" not in v.tokens

    def test_language_coverage_tracked(self):
        v = build_vocab([("aa", "abc abc"), ("bb", "ab")], min_count=2)
        assert v.language_coverage["aa"] >= v.language_coverage["bb"]


class TestCodec:
    def test_empty_text(self):
        v = build_vocab(corpus("ab"), 1)
        assert v.encode("") == [BEGIN, END]

    def test_direct_lookup(self):
        v = build_vocab(corpus("ab"), 1)
        assert v.encode("ab") == [BEGIN, v.id_of("a"), v.id_of("b"), END]

    def test_oov_single_unknown(self):
        v = build_vocab(corpus("ab"), 1)
        ids = v.encode("aqb")
        assert ids.count(UNK) == 1
        assert ids[2] == UNK

    def test_decode_drops_specials(self):
        v = build_vocab(corpus("a"), 1)
        assert v.decode([BEGIN, v.id_of("a"), END]) == "a"
        assert v.decode([BEGIN, END, PAD, PAD]) == ""

    def test_decode_out_of_range(self):
        v = build_vocab(corpus("a"), 1)
        with pytest.raises(ValueError, match="out of range"):
            v.decode([99])

    def test_roundtrip(self):
        v = build_vocab(corpus("the cat sat"), 1)
        s = normalize_text("the cat sat")
        assert v.decode(v.encode(s)) == s

    @given(st.text(alphabet="abc ", max_size=30))
    @settings(max_examples=50, deadline=None)
    def test_encode_decode_encode_fixpoint(self, s):
        v = build_vocab(corpus("aaa bbb ccc"), 1)
        once = v.encode(s)
        again = v.encode(v.decode(once))
        assert again == once


class TestExtend:
    def test_covered_corpus_is_noop(self):
        v = build_vocab(corpus("abab"), 1)
        w = v.extend(corpus("ba"))
        assert w.tokens == v.tokens

    def test_empty_new_corpus_unchanged(self):
        v = build_vocab(corpus("ab"), 1)
        assert v.extend([]).tokens == v.tokens

    def test_ids_preserved_and_appended(self):
        v = build_vocab(corpus("aab"), 1)
        w = v.extend(corpus("cccd"), min_count=1)
        for t in v.tokens:
            assert w.id_of(t) == v.id_of(t)
        assert set(w.tokens) - set(v.tokens) == {"c", "d"}

    def test_old_text_encodes_identically(self):
        v = build_vocab(corpus("hello world"), 1)
        w = v.extend(corpus("привет мир"), min_count=1)
        assert v.encode("hello world") == w.encode("hello world")

    def test_paper_scale_growth(self):
        # 3328-token inventory gaining 384 graphemes -> 3712, ids stable
        base_tokens = [chr(0x4E00 + i) for i in range(3324)]
        v = build_vocab([("zh", " ".join(base_tokens))], 1)
        assert len(v) == 3328 + 1  # space token rides along
        new_tokens = [chr(0x4E00 + 3324 + i) for i in range(384)]
        w = v.extend([("ja", "".join(new_tokens))], min_count=1)
        assert len(w) == len(v) + 384
        assert w.tokens[: len(v)] == v.tokens


class TestFileFormat:
    def test_roundtrip_with_header(self, tmp_path):
        v = build_vocab(corpus("abc abc"), 2)
        path = tmp_path / "vocab.txt"
        v.save(path)
        lines = path.read_text(encoding="utf-8").split("\n")
        assert lines[0].startswith("#!")
        assert "min_count=2" in lines[0]
        w = GraphemeVocab.load(path)
        assert w.tokens == v.tokens
        assert w.min_count == 2

    def test_line_number_is_id(self, tmp_path):
        v = build_vocab(corpus("xyz"), 1)
        path = tmp_path / "vocab.txt"
        v.save(path)
        body = [l for l in path.read_text(encoding="utf-8").split("\n")[:-1] if not l.startswith("#!")]
        for i, token in enumerate(body):
            assert v.tokens[i] == token

    def test_tampered_file_detected(self, tmp_path):
        v = build_vocab(corpus("abcd"), 1)
        path = tmp_path / "vocab.txt"
        v.save(path)
        text = path.read_text(encoding="utf-8")
        path.write_text(text.replace("\nd", "\nq"), encoding="utf-8")
        with pytest.raises(ValueError, match="hash"):
            GraphemeVocab.load(path)

    def test_space_token_survives_roundtrip(self, tmp_path):
        v = build_vocab(corpus("a b"), 1)
        assert " " in v.tokens
        path = tmp_path / "vocab.txt"
        v.save(path)
        assert GraphemeVocab.load(path).tokens == v.tokens
