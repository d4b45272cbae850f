"""Word error rate: minimal-edit alignment and per-language reports."""

from __future__ import annotations

from dataclasses import dataclass

import regex

from .data import load_features
from .text import graphemes, normalize_text

# scripts written without word spaces are scored one grapheme per unit
_SPACE_FREE = regex.compile(
    r"[\p{Han}\p{Hiragana}\p{Katakana}\p{Thai}\p{Khmer}\p{Lao}\p{Myanmar}]"
)


def scoring_units(text: str) -> list[str]:
    """Whitespace-delimited words, or grapheme clusters for space-free scripts."""
    text = normalize_text(text)
    if not text:
        return []
    if _SPACE_FREE.search(text):
        return [g for g in graphemes(text) if not g.isspace()]
    return text.split()


def align_wer(reference, hypothesis) -> tuple[int, int, int]:
    """(substitutions, deletions, insertions) of a minimal-edit alignment.

    Ties between minimal alignments resolve toward substitutions (which,
    at fixed total cost, uniquely pins down the triple).
    """
    ref, hyp = list(reference), list(hypothesis)
    if not ref:
        raise ValueError("empty reference")
    n_hyp = len(hyp)
    cost = list(range(n_hyp + 1))
    subs = [0] * (n_hyp + 1)
    for i in range(1, len(ref) + 1):
        prev_cost, prev_subs = cost, subs
        cost = [i] + [0] * n_hyp
        subs = [0] * (n_hyp + 1)
        for j in range(1, n_hyp + 1):
            if ref[i - 1] == hyp[j - 1]:
                best = (prev_cost[j - 1], prev_subs[j - 1])
            else:
                best = (prev_cost[j - 1] + 1, prev_subs[j - 1] + 1)
            for c, s in ((cost[j - 1] + 1, subs[j - 1]), (prev_cost[j] + 1, prev_subs[j])):
                if c < best[0] or (c == best[0] and s > best[1]):
                    best = (c, s)
            cost[j], subs[j] = best
    total, s = cost[n_hyp], subs[n_hyp]
    # deletions - insertions == len(ref) - len(hyp) at any alignment
    d = (total - s + len(ref) - n_hyp) // 2
    i = total - s - d
    return s, d, i


@dataclass
class LanguageWER:
    substitutions: int = 0
    deletions: int = 0
    insertions: int = 0
    reference_words: int = 0

    @property
    def wer(self) -> float:
        if self.reference_words == 0:
            raise ValueError("no reference words accumulated")
        return (self.substitutions + self.deletions + self.insertions) / self.reference_words

    def add(self, s, d, i, n):
        self.substitutions += s
        self.deletions += d
        self.insertions += i
        self.reference_words += n


@dataclass
class WERReport:
    per_language: dict

    @property
    def average_wer(self) -> float:
        """Unweighted mean over languages."""
        if not self.per_language:
            raise ValueError("empty report")
        return sum(l.wer for l in self.per_language.values()) / len(self.per_language)

    @property
    def weighted_average_wer(self) -> float:
        """Pooled errors over pooled reference words."""
        errors = sum(
            l.substitutions + l.deletions + l.insertions for l in self.per_language.values()
        )
        words = sum(l.reference_words for l in self.per_language.values())
        if words == 0:
            raise ValueError("empty report")
        return errors / words

    def to_records(self) -> list[dict]:
        rows = [
            {
                "language": code,
                "substitutions": l.substitutions,
                "deletions": l.deletions,
                "insertions": l.insertions,
                "reference_words": l.reference_words,
                "wer": l.wer,
            }
            for code, l in self.per_language.items()
        ]
        rows.append(
            {
                "language": "average",
                "wer": self.average_wer,
                "weighted_wer": self.weighted_average_wer,
            }
        )
        return rows

    def render(self) -> str:
        lines = [f"{'language':<12} {'S':>6} {'D':>6} {'I':>6} {'N':>8} {'WER%':>7}"]
        for code, l in self.per_language.items():
            lines.append(
                f"{code:<12} {l.substitutions:>6} {l.deletions:>6} "
                f"{l.insertions:>6} {l.reference_words:>8} {100 * l.wer:>7.2f}"
            )
        lines.append(f"{'average':<12} {'':>6} {'':>6} {'':>6} {'':>8} {100 * self.average_wer:>7.2f}")
        return "\n".join(lines)


def evaluate(
    model,
    records,
    vocab,
    table,
    beam_size: int = 4,
    max_len: int | None = None,
    normalizer=None,
) -> WERReport:
    """Decode every utterance and accumulate per-language error counts."""
    if not records:
        raise ValueError("no utterances to evaluate")
    per_language: dict[str, LanguageWER] = {}
    for rec in records:
        lang_id = table.id_of(rec.language_code)
        if lang_id >= model.config.num_languages:
            raise ValueError(
                f"model covers {model.config.num_languages} languages, "
                f"manifest has {rec.language_code!r} at id {lang_id}"
            )
        ref = scoring_units(rec.transcript)
        if not ref:
            raise ValueError(f"empty reference transcript for {rec.id}")
        feats = load_features(rec)
        if normalizer is not None:
            feats = normalizer(feats)
        hyp = model.transcribe(feats, lang_id, beam_size=beam_size, max_len=max_len)
        s, d, i = align_wer(ref, scoring_units(vocab.decode(hyp.ids)))
        per_language.setdefault(rec.language_code, LanguageWER()).add(s, d, i, len(ref))
    ordered = {c: per_language[c] for c in table.codes if c in per_language}
    return WERReport(per_language=ordered)
