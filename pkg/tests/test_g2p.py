import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cogforge.errors import DataError, ParseError
from cogforge.g2p import (G2PRuleset, RewriteRule, backoff_detail,
                          backoff_transcribe, compile_ruleset, load_g2p_dir,
                          parse_rule, transcribe, transcribe_detail)


def ruleset(mapping, pre=(), post=()):
    return G2PRuleset(mapping=tuple(mapping.items()), pre_rules=tuple(pre),
                      post_rules=tuple(post))


HU = {"a": "ɒ", "sz": "s", "ó": "oː"}


class TestCompile:
    def test_longest_key_first(self, tmp_path):
        path = tmp_path / "map.csv"
        path.write_text("orth,phon\na,ɒ\nsz,s\nó,oː\n", encoding="utf-8")
        rs = compile_ruleset(path)
        assert len(rs.mapping) == 3
        assert rs.mapping[0][0] == "sz"

    def test_rule_file_line(self, tmp_path):
        map_path = tmp_path / "map.csv"
        map_path.write_text("orth,phon\nn,n\np,p\nm,m\n", encoding="utf-8")
        post = tmp_path / "post.txt"
        post.write_text("% nasal assimilation\nn -> m / _ p\n",
                        encoding="utf-8")
        rs = compile_ruleset(map_path, post_path=post)
        assert len(rs.post_rules) == 1
        assert rs.post_rules[0].src == "n"

    def test_duplicate_key_errors(self, tmp_path):
        path = tmp_path / "map.csv"
        path.write_text("orth,phon\na,ɒ\na,a\n", encoding="utf-8")
        with pytest.raises(ParseError):
            compile_ruleset(path)

    def test_empty_key_rejected(self):
        with pytest.raises(DataError):
            ruleset({"": "x"})

    def test_bad_rule_line_reports_number(self, tmp_path):
        map_path = tmp_path / "map.csv"
        map_path.write_text("orth,phon\na,a\n", encoding="utf-8")
        pre = tmp_path / "pre.txt"
        pre.write_text("% fine\nno arrow here\n", encoding="utf-8")
        with pytest.raises(ParseError) as err:
            compile_ruleset(map_path, pre_path=pre)
        assert "line 2" in str(err.value)


class TestTranscribe:
    def test_longest_match(self):
        assert transcribe(ruleset(HU), "szó") == "soː"

    def test_empty_word(self):
        assert transcribe(ruleset(HU), "") == ""

    def test_strict_unknown_errors(self):
        with pytest.raises(DataError) as err:
            transcribe(ruleset({"a": "ɒ"}), "ab", unknown="strict")
        assert "'b'" in str(err.value)

    def test_pass_policy_flags(self):
        result = transcribe_detail(ruleset({"a": "ɒ"}), "ab", unknown="pass")
        assert result.ipa == "ɒb"
        assert result.unmapped == ("b",)
        assert not result.covered

    def test_drop_policy(self):
        result = transcribe_detail(ruleset({"a": "ɒ"}), "ab", unknown="drop")
        assert result.ipa == "ɒ"
        assert result.unmapped == ("b",)

    def test_case_folded_before_mapping(self):
        assert transcribe(ruleset(HU), "SZÓ") == "soː"

    def test_pre_rule_applies_before_map(self):
        pre = [parse_rule("x -> sz /  _ ")]
        assert transcribe(ruleset(HU, pre=pre), "xó") == "soː"

    def test_post_rule_with_context(self):
        post = [parse_rule("n -> m / _ p")]
        rs = ruleset({"n": "n", "p": "p", "a": "a"}, post=post)
        assert transcribe(rs, "anpa") == "ampa"
        assert transcribe(rs, "ana") == "ana"

    def test_boundary_anchor(self):
        post = [parse_rule("n -> m / # _ ")]
        rs = ruleset({"n": "n", "a": "a"}, post=post)
        assert transcribe(rs, "nana") == "mana"

    def test_right_boundary_anchor(self):
        post = [parse_rule("n -> m / _ #")]
        rs = ruleset({"n": "n", "a": "a"}, post=post)
        assert transcribe(rs, "nan") == "nam"

    def test_deletion_rule(self):
        post = [parse_rule("h ->  / _ ")]
        rs = ruleset({"h": "h", "a": "a"}, post=post)
        assert transcribe(rs, "aha") == "aa"

    def test_output_length_bound(self):
        rs = ruleset(HU)
        word = "szószó"
        out = transcribe(rs, word)
        max_phon = max(len(v) for _, v in rs.mapping)
        assert len(out) <= max_phon * len(word)


class TestBackoff:
    LATIN = {"d": "d", "a": "a"}
    CYRILLIC = {"д": "d", "а": "a"}

    def test_picks_covering_ruleset(self):
        out = backoff_transcribe([ruleset(self.LATIN), ruleset(self.CYRILLIC)],
                                 "да")
        assert out == "da"

    def test_single_ruleset_degenerate(self):
        rs = ruleset(HU)
        assert backoff_transcribe([rs], "szó") == transcribe(rs, "szó")

    def test_tie_prefers_earlier(self):
        first = ruleset({"a": "1"})
        second = ruleset({"a": "2"})
        assert backoff_transcribe([first, second], "ab") == "1b"

    def test_covering_first_equals_transcribe(self):
        rs = ruleset(HU)
        assert (backoff_transcribe([rs, ruleset(self.CYRILLIC)], "szó")
                == transcribe(rs, "szó"))

    def test_fewest_misses_wins(self):
        sparse = ruleset({"x": "x"})
        dense = ruleset({"д": "d"})
        detail = backoff_detail([sparse, dense], "да")
        assert detail.ipa == "dа"
        assert len(detail.unmapped) == 1

    def test_empty_list_errors(self):
        with pytest.raises(DataError):
            backoff_transcribe([], "a")


def brute_leftmost_longest(mapping, word):
    out = []
    i = 0
    while i < len(word):
        best = None
        for key, value in mapping.items():
            if word.startswith(key, i):
                if best is None or len(key) > len(best):
                    best = key
        if best is None:
            out.append(word[i])
            i += 1
        else:
            out.append(mapping[best])
            i += len(best)
    return "".join(out)


@st.composite
def map_and_word(draw):
    alphabet = "abcd"
    keys = draw(st.lists(
        st.text(alphabet=alphabet, min_size=1, max_size=3),
        min_size=1, max_size=8, unique=True))
    values = draw(st.lists(st.text(alphabet="xyz", min_size=0, max_size=2),
                           min_size=len(keys), max_size=len(keys)))
    word = draw(st.text(alphabet=alphabet, min_size=0, max_size=10))
    return dict(zip(keys, values)), word


@given(map_and_word())
@settings(max_examples=300)
def test_longest_match_against_oracle(case):
    mapping, word = case
    assert (transcribe(ruleset(mapping), word, unknown="pass")
            == brute_leftmost_longest(mapping, word))


class TestDirLoading:
    def test_ranked_files_and_rewrites(self, tmp_path):
        (tmp_path / "abcd1234.csv").write_text("orth,phon\na,ɑ\n",
                                               encoding="utf-8")
        (tmp_path / "abcd1234.1.csv").write_text("orth,phon\nа,ɑ\n",
                                                 encoding="utf-8")
        (tmp_path / "abcd1234.pre.txt").write_text("x -> a / _ \n",
                                                   encoding="utf-8")
        (tmp_path / "efgh5678.csv").write_text("orth,phon\nb,b\n",
                                               encoding="utf-8")
        loaded = load_g2p_dir(tmp_path)
        assert sorted(loaded) == ["abcd1234", "efgh5678"]
        assert len(loaded["abcd1234"]) == 2
        assert len(loaded["abcd1234"][0].pre_rules) == 1

    def test_rewrite_rule_repr_fields(self):
        rule = parse_rule("sz -> s / a _ b#")
        assert isinstance(rule, RewriteRule)
        assert (rule.src, rule.dst) == ("sz", "s")
