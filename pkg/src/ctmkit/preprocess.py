"""Abstract cleaning: tokenize, strip parenthesized spans and non-letters,
collapse immediate repeats, drop stop/excluded terms, form unigrams+bigrams.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .corpus import Corpus

_LETTER_RUN = re.compile(r"[^\W\d_]+", re.UNICODE)


def load_termlist(path) -> set[str]:
    """Read a one-term-per-line file; '#' starts a comment, blanks ignored."""
    terms = set()
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            terms.add(line.lower())
    return terms


def _bundled(name: str) -> set[str]:
    text = resources.files("ctmkit.data").joinpath(name).read_text(encoding="utf-8")
    terms = set()
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            terms.add(line.lower())
    return terms


def default_stoplist() -> set[str]:
    return _bundled("stopwords.txt")


def default_exclusion_list() -> set[str]:
    return _bundled("exclusions.txt")


@dataclass
class CleanConfig:
    stoplist: set[str] = field(default_factory=default_stoplist)
    exclusion_list: set[str] = field(default_factory=default_exclusion_list)
    strip_parenthesized: bool = True
    collapse_repeats: bool = True
    ngram_min: int = 1
    ngram_max: int = 2

    def __post_init__(self):
        if not 1 <= self.ngram_min <= self.ngram_max <= 2:
            raise ValueError(
                f"ngram range must satisfy 1 <= min <= max <= 2, "
                f"got ({self.ngram_min}, {self.ngram_max})"
            )
        self.stoplist = {t.lower() for t in self.stoplist}
        self.exclusion_list = {t.lower() for t in self.exclusion_list}


@dataclass
class CleanDoc:
    id: str
    terms: list[str]


def _strip_parenthesized(text: str) -> str:
    # Remove outermost spans; an unmatched "(" swallows the rest of the text.
    out = []
    depth = 0
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            if depth > 0:
                depth -= 1
        elif depth == 0:
            out.append(ch)
    return "".join(out)


def clean_text(raw: str, config: CleanConfig | None = None) -> list[str]:
    """Lowercase alphabetic tokens of ``raw``; parenthesized spans removed
    before tokenization, immediate repeats collapsed when configured."""
    if config is None:
        config = CleanConfig()
    text = raw
    if config.strip_parenthesized:
        text = _strip_parenthesized(text)
    tokens = [t.lower() for t in _LETTER_RUN.findall(text)]
    if config.collapse_repeats:
        collapsed = []
        prev = None
        for t in tokens:
            if t != prev:
                collapsed.append(t)
            prev = t
        tokens = collapsed
    return tokens


def remove_stop_and_excluded(tokens: list[str], config: CleanConfig) -> list[str]:
    """Drop stoplist and excluded unigrams, preserving order."""
    banned = config.stoplist | config.exclusion_list
    return [t for t in tokens if t not in banned]


def build_ngrams(tokens: list[str], config: CleanConfig) -> list[str]:
    """All unigrams in order, then adjacent bigrams joined with '_'.

    A bigram is dropped only when its space-joined form is itself on the
    exclusion list; unigram membership is not re-checked here.
    """
    terms = []
    if config.ngram_min <= 1:
        terms.extend(tokens)
    if config.ngram_max >= 2:
        for a, b in zip(tokens, tokens[1:]):
            if f"{a} {b}" in config.exclusion_list:
                continue
            terms.append(f"{a}_{b}")
    return terms


def preprocess_corpus(
    corpus: Corpus, config: CleanConfig | None = None
) -> tuple[list[CleanDoc], list[str]]:
    """Clean every abstract (titles excluded) in corpus order.

    Returns (clean_docs, warn_ids) where warn_ids lists documents whose term
    list came out empty; those docs are kept with empty terms.
    """
    if config is None:
        config = CleanConfig()
    docs = []
    warnings = []
    for d in corpus:
        tokens = clean_text(d.abstract, config)
        tokens = remove_stop_and_excluded(tokens, config)
        terms = build_ngrams(tokens, config)
        if not terms:
            warnings.append(d.id)
        docs.append(CleanDoc(id=d.id, terms=terms))
    return docs, warnings
