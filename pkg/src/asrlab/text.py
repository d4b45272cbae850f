"""Unified grapheme vocabulary: build, encode/decode, extend, file format.

Tokens are extended grapheme clusters (UAX #29, via the regex module), so
combining sequences, emoji ZWJ chains, and Hangul syllable blocks each count
as one token. Four specials occupy the reserved ids 0..3. The vocabulary is
immutable; extension returns a new value with all existing ids preserved.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field

import regex

SPECIALS = ("<s>", "</s>", "<pad>", "<unk>")
BEGIN, END, PAD, UNK = 0, 1, 2, 3
_HEADER_PREFIX = "#!"


def normalize_text(text):
    """Collapse whitespace runs to single spaces and trim the ends."""
    return " ".join(text.split())


def graphemes(text):
    """Extended grapheme clusters of `text`, in order."""
    return regex.findall(r"\X", text)


def _count_clusters(corpus):
    """corpus: iterable of (language_code, transcript). Returns
    (total Counter, per-language Counter of distinct-token usage)."""
    total = Counter()
    per_language = {}
    for language, transcript in corpus:
        clusters = graphemes(normalize_text(transcript))
        total.update(clusters)
        per_language.setdefault(language, Counter()).update(clusters)
    return total, per_language


def _qualify(counts, min_count, exclude=()):
    keep = [t for t, c in counts.items() if c >= min_count and t not in exclude]
    keep.sort(key=lambda t: (-counts[t], t))
    return keep


@dataclass(frozen=True)
class GraphemeVocab:
    tokens: tuple
    min_count: int
    language_coverage: dict = field(default_factory=dict)

    def __post_init__(self):
        if tuple(self.tokens[:4]) != SPECIALS:
            raise ValueError(f"ids 0..3 must be the specials {SPECIALS}")
        if len(set(self.tokens)) != len(self.tokens):
            dupes = [t for t, c in Counter(self.tokens).items() if c > 1]
            raise ValueError(f"duplicate tokens: {dupes!r}")
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.tokens)})

    def __len__(self):
        return len(self.tokens)

    def id_of(self, token):
        return self._index.get(token, UNK)

    def encode(self, text):
        """[begin, cluster ids (unknown for OOV), end]."""
        ids = [self._index.get(g, UNK) for g in graphemes(normalize_text(text))]
        return [BEGIN] + ids + [END]

    def decode(self, ids):
        out = []
        for i in ids:
            if not 0 <= i < len(self.tokens):
                raise ValueError(f"token id {i} out of range for vocab of size {len(self.tokens)}")
            if i >= len(SPECIALS):
                out.append(self.tokens[i])
        return "".join(out)

    def content_hash(self):
        payload = "\n".join(self.tokens).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()

    def extend(self, new_corpus, min_count=None):
        """Append qualifying unseen graphemes; existing ids never move."""
        min_count = self.min_count if min_count is None else min_count
        counts, per_language = _count_clusters(new_corpus)
        fresh = _qualify(counts, min_count, exclude=self._index)
        coverage = dict(self.language_coverage)
        for language, ctr in per_language.items():
            known = set(self.tokens) | set(fresh)
            coverage[language] = max(
                coverage.get(language, 0), sum(1 for t in ctr if t in known)
            )
        return GraphemeVocab(self.tokens + tuple(fresh), min_count, coverage)

    def save(self, path):
        lines = [
            f"{_HEADER_PREFIX} min_count={self.min_count}",
            f"{_HEADER_PREFIX} sha256={self.content_hash()}",
        ]
        lines.extend(self.tokens)
        with open(path, "w", encoding="utf-8") as f:
            f.write("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path):
        min_count = 1
        expected_hash = None
        tokens = []
        with open(path, encoding="utf-8") as f:
            in_header = True
            for raw in f.read().split("\n")[:-1]:
                if in_header and raw.startswith(_HEADER_PREFIX):
                    body = raw[len(_HEADER_PREFIX) :].strip()
                    if body.startswith("min_count="):
                        min_count = int(body.split("=", 1)[1])
                    elif body.startswith("sha256="):
                        expected_hash = body.split("=", 1)[1]
                    continue
                in_header = False
                tokens.append(raw)
        vocab = cls(tuple(tokens), min_count)
        if expected_hash is not None and vocab.content_hash() != expected_hash:
            raise ValueError(f"{path}: vocabulary content does not match its recorded hash")
        return vocab


def build_vocab(corpus, min_count):
    """Frequency-filtered grapheme inventory over (language, transcript) pairs.

    Tokens with count >= min_count, ordered by descending frequency then
    codepoint, behind the four specials.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts, per_language = _count_clusters(corpus)
    if not counts:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    kept = _qualify(counts, min_count)
    keep_set = set(kept)
    coverage = {
        language: sum(1 for t in ctr if t in keep_set)
        for language, ctr in per_language.items()
    }
    return GraphemeVocab(SPECIALS + tuple(kept), min_count, coverage)
