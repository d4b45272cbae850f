"""The 15-language voice-search corpus statistics and decoder family buckets.

Utterance counts (millions) and hours (thousands) drive natural-distribution
sampling and the documented capacity-planner presets. Decoder routing groups
languages into five buckets: Germanic, Italic, Arabic, Indo-Iranian, and a
catch-all for the rest.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class LanguageInfo:
    code: str
    family: str
    utterances_m: float
    hours_k: float


CORPUS_15 = (
    LanguageInfo("en-us", "germanic", 34.6, 53.5),
    LanguageInfo("en-in", "germanic", 17.9, 27.1),
    LanguageInfo("es-us", "italic", 31.3, 47.6),
    LanguageInfo("pt-br", "italic", 17.9, 32.9),
    LanguageInfo("es-es", "italic", 16.1, 23.5),
    LanguageInfo("ar-gulf", "afro-asiatic", 7.7, 11.9),
    LanguageInfo("ar-eg", "afro-asiatic", 7.6, 11.9),
    LanguageInfo("hi-in", "indo-iranian", 19.8, 32.3),
    LanguageInfo("mr-in", "indo-iranian", 11.4, 16.7),
    LanguageInfo("bn-bd", "indo-iranian", 8.6, 16.5),
    LanguageInfo("zh-tw", "sino-tibetan", 17.2, 22.8),
    LanguageInfo("ru-ru", "balto-slavic", 14.8, 22.8),
    LanguageInfo("tr-tr", "turkic", 15.5, 22.1),
    LanguageInfo("hu-hu", "uralic", 6.5, 9.9),
    LanguageInfo("ms-my", "austronesian", 4.6, 7.6),
)

TOTAL_UTTERANCES_M = 231.6
TOTAL_HOURS_K = 359.2

DECODER_FAMILIES = ("germanic", "italic", "arabic", "indo_iranian", "others")

_FAMILY_BUCKET = {
    "germanic": "germanic",
    "italic": "italic",
    "afro-asiatic": "arabic",
    "indo-iranian": "indo_iranian",
}


def decoder_family(info):
    """Routing bucket for a LanguageInfo (unlisted families -> others)."""
    return _FAMILY_BUCKET.get(info.family, "others")


class LanguageTable:
    """Ordered language inventory; position = language id."""

    def __init__(self, infos):
        infos = tuple(infos)
        if len({i.code for i in infos}) != len(infos):
            raise ValueError("duplicate language codes")
        self.infos = infos
        self._by_code = {info.code: i for i, info in enumerate(infos)}

    def __len__(self):
        return len(self.infos)

    def __iter__(self):
        return iter(self.infos)

    @property
    def codes(self):
        return [info.code for info in self.infos]

    def id_of(self, code):
        if code not in self._by_code:
            raise KeyError(f"unknown language {code!r}; table has {self.codes}")
        return self._by_code[code]

    def natural_weights(self):
        """Sampling weights proportional to per-language utterance counts."""
        total = sum(info.utterances_m for info in self.infos)
        return [info.utterances_m / total for info in self.infos]

    def family_ids(self):
        """language id -> routing instance id over DECODER_FAMILIES order."""
        used = []
        for info in self.infos:
            bucket = decoder_family(info)
            if bucket not in used:
                used.append(bucket)
        ordered = [f for f in DECODER_FAMILIES if f in used]
        return {
            i: ordered.index(decoder_family(info)) for i, info in enumerate(self.infos)
        }, ordered

    def is_superset_of(self, other):
        """True when `other`'s codes appear here as a prefix-preserving subset."""
        return all(
            code in self._by_code and self._by_code[code] == i
            for i, code in enumerate(other.codes)
        )

    def to_dict(self):
        return [
            {
                "code": i.code,
                "family": i.family,
                "utterances_m": i.utterances_m,
                "hours_k": i.hours_k,
            }
            for i in self.infos
        ]

    @classmethod
    def from_dict(cls, rows):
        return cls(
            LanguageInfo(r["code"], r["family"], r["utterances_m"], r["hours_k"])
            for r in rows
        )


def corpus_table():
    return LanguageTable(CORPUS_15)
