"""Language-weighted batch sampling.

A mixing schedule assigns one weight per language.  Batches draw a language
per slot from the normalized weights, then an utterance uniformly within
that language.  Weights can be replaced mid-run, which is how an operator
rebalances a training mix without restarting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..languages import LanguageTable


@dataclass(frozen=True)
class MixingSchedule:
    """Per-language sampling weights, stored unnormalized.

    ``weights[i]`` corresponds to ``table.codes[i]``.  Zero weight removes a
    language from the draw entirely; the total must be positive.
    """

    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.weights) == 0:
            raise ValueError("mixing schedule needs at least one language")
        arr = np.asarray(self.weights, dtype=np.float64)
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise ValueError("mixing weights must be finite and non-negative")
        if arr.sum() <= 0:
            raise ValueError("mixing weights must not all be zero")

    def probabilities(self) -> np.ndarray:
        arr = np.asarray(self.weights, dtype=np.float64)
        return arr / arr.sum()

    def replaced(self, updates: dict[int, float]) -> "MixingSchedule":
        """Return a copy with ``updates[lang_id] = weight`` applied."""
        weights = list(self.weights)
        for lang_id, w in updates.items():
            if not 0 <= lang_id < len(weights):
                raise ValueError(f"language id {lang_id} out of range")
            weights[lang_id] = float(w)
        return MixingSchedule(tuple(weights))


def natural_schedule(table: LanguageTable) -> MixingSchedule:
    """Weights proportional to each language's utterance count."""
    return MixingSchedule(tuple(table.natural_weights()))


def rebalanced_schedule(table: LanguageTable, floor: float = 0.0) -> MixingSchedule:
    """Natural weights with every language lifted to at least ``floor``.

    ``floor`` is a probability (after normalization the smallest language
    gets at least roughly this share).  ``floor=0`` returns the natural mix.
    """
    if not 0 <= floor <= 1.0 / len(table.codes):
        raise ValueError("floor must be between 0 and 1/num_languages")
    probs = np.asarray(natural_schedule(table).probabilities())
    lifted = np.maximum(probs, floor)
    return MixingSchedule(tuple(float(x) for x in lifted / lifted.sum()))


def sample_batch(
    groups: dict[int, list],
    schedule: MixingSchedule,
    batch_size: int,
    rng: np.random.Generator,
) -> list:
    """Draw ``batch_size`` records: language by weight, utterance uniformly.

    ``groups`` maps language id to that language's records.  A language with
    positive weight but no records is an error, since silently renormalizing
    would skew the mix the operator asked for.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be positive")
    probs = schedule.probabilities()
    for lang_id, p in enumerate(probs):
        if p > 0 and not groups.get(lang_id):
            raise ValueError(f"language {lang_id} has weight {p:.4f} but no utterances")

    counts = rng.multinomial(batch_size, probs)
    picked = []
    for lang_id, n in enumerate(counts):
        if n == 0:
            continue
        pool = groups[lang_id]
        idx = rng.integers(0, len(pool), size=n)
        picked.extend(pool[i] for i in idx)
    # Multinomial ordering would cluster languages; shuffle so downstream
    # truncation or sharding does not bias the mix.
    order = rng.permutation(len(picked))
    return [picked[i] for i in order]
