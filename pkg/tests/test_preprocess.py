import re
import string

import pytest

from ctmkit.corpus import Corpus, Document
from ctmkit.preprocess import (
    CleanConfig,
    build_ngrams,
    clean_text,
    default_exclusion_list,
    default_stoplist,
    load_termlist,
    preprocess_corpus,
    remove_stop_and_excluded,
)


@pytest.fixture()
def config():
    return CleanConfig()


class TestCleanText:
    def test_empty_input(self, config):
        assert clean_text("", config) == []

    def test_hand_traced_cleaning(self, config):
        # parenthesized span dropped, lowercased, digits and punctuation removed
        assert clean_text("Energy (AI-based) Systems 2021!", config) == ["energy", "systems"]

    def test_repeat_collapsed(self, config):
        assert clean_text("smart smart grid", config) == ["smart", "grid"]

    def test_repeats_kept_when_disabled(self):
        config = CleanConfig(collapse_repeats=False)
        assert clean_text("smart smart grid", config) == ["smart", "smart", "grid"]

    def test_parentheses_kept_when_disabled(self):
        config = CleanConfig(strip_parenthesized=False)
        assert clean_text("a (b) c", config) == ["a", "b", "c"]

    def test_nested_parentheses_removed_to_outer_close(self, config):
        assert clean_text("a (b (c) d) e", config) == ["a", "e"]

    def test_unmatched_open_swallows_rest(self, config):
        assert clean_text("a (b c", config) == ["a"]

    def test_unmatched_close_is_punctuation(self, config):
        assert clean_text("a ) b", config) == ["a", "b"]

    def test_digits_inside_words_split(self, config):
        assert clean_text("covid19 response", config) == ["covid", "response"]

    def test_idempotent_on_random_text(self, rng):
        alphabet = string.ascii_letters + string.digits + string.punctuation + "  ()"
        for _ in range(50):
            n = int(rng.integers(0, 80))
            raw = "".join(alphabet[i] for i in rng.integers(0, len(alphabet), size=n))
            config = CleanConfig()
            once = clean_text(raw, config)
            again = clean_text(" ".join(once), config)
            assert once == again

    def test_no_forbidden_characters(self, rng):
        alphabet = string.printable
        pattern = re.compile(r"[\d\s!-/:-@\[-`{-~]")
        for _ in range(50):
            n = int(rng.integers(0, 100))
            raw = "".join(alphabet[i] for i in rng.integers(0, len(alphabet), size=n))
            for token in clean_text(raw, CleanConfig()):
                assert not pattern.search(token), token
                assert token == token.lower()


class TestStopAndExcluded:
    def test_default_stoplist_removal(self, config):
        assert remove_stop_and_excluded(["the", "smart", "grid"], config) == ["smart", "grid"]

    def test_core_keywords_all_excluded(self, config):
        assert remove_stop_and_excluded(["ai", "energy", "sustainability"], config) == []

    def test_empty(self, config):
        assert remove_stop_and_excluded([], config) == []

    def test_order_preserved(self, config):
        tokens = ["grid", "of", "solar", "the", "wind"]
        assert remove_stop_and_excluded(tokens, config) == ["grid", "solar", "wind"]


class TestBuildNgrams:
    def test_unigrams_then_bigram(self, config):
        assert build_ngrams(["smart", "grid"], config) == ["smart", "grid", "smart_grid"]

    def test_single_token(self, config):
        assert build_ngrams(["solar"], config) == ["solar"]

    def test_empty(self, config):
        assert build_ngrams([], config) == []

    def test_excluded_bigram_dropped_but_unigrams_formed(self):
        # only the joined bigram is on the list; unigram membership not re-checked
        config = CleanConfig(exclusion_list={"artificial intelligence"})
        tokens = ["artificial", "intelligence", "lab"]
        assert build_ngrams(tokens, config) == [
            "artificial", "intelligence", "lab", "intelligence_lab",
        ]

    def test_unigram_only_range(self):
        config = CleanConfig(ngram_max=1)
        assert build_ngrams(["smart", "grid"], config) == ["smart", "grid"]

    def test_bad_ngram_range_rejected(self):
        with pytest.raises(ValueError):
            CleanConfig(ngram_min=0)
        with pytest.raises(ValueError):
            CleanConfig(ngram_min=2, ngram_max=1)


class TestPreprocessCorpus:
    def _corpus(self, abstracts):
        return Corpus(documents=[
            Document(id=f"d{i}", title="ignored title", abstract=a, year=2010)
            for i, a in enumerate(abstracts)
        ])

    def test_all_stopwords_yields_empty_with_warning(self):
        docs, warnings = preprocess_corpus(self._corpus(["the the the"]))
        assert docs[0].terms == []
        assert warnings == ["d0"]

    def test_order_preserved(self):
        docs, _ = preprocess_corpus(self._corpus(["solar panel", "wind turbine"]))
        assert [d.id for d in docs] == ["d0", "d1"]
        assert docs[0].terms[0] == "solar"

    def test_core_keyword_exclusion_end_to_end(self):
        docs, _ = preprocess_corpus(self._corpus(["artificial intelligence for energy"]))
        terms = docs[0].terms
        assert "energy" not in terms
        assert "artificial_intelligence" not in terms
        assert "artificial" not in terms

    def test_title_not_used(self):
        corpus = Corpus(documents=[
            Document(id="a", title="solar panel", abstract="wind turbine", year=2010)
        ])
        docs, _ = preprocess_corpus(corpus)
        assert "solar" not in docs[0].terms
        assert "wind" in docs[0].terms

    def test_alignment_with_corpus(self, rng):
        n = 17
        corpus = self._corpus([f"term{i} value{i}" for i in range(n)])
        docs, _ = preprocess_corpus(corpus)
        assert len(docs) == n
        assert [d.id for d in docs] == corpus.ids


class TestTermlists:
    def test_bundled_lists_load(self):
        stops = default_stoplist()
        assert "the" in stops and "and" in stops
        excl = default_exclusion_list()
        assert "artificial intelligence" in excl
        assert {"artificial", "intelligence", "ai", "energy",
                "sustainable", "sustainability"} <= excl

    def test_load_termlist_comments_and_blanks(self, tmp_path):
        path = tmp_path / "terms.txt"
        path.write_text("# comment\nsolar\n\nWind  # inline\n")
        assert load_termlist(path) == {"solar", "wind"}
