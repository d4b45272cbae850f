"""Beam search over a stepwise decoder interface.

A stepper exposes start() -> state and step(state, last_token) ->
(log-probabilities over the vocabulary, next state). Scores are raw
(length-unnormalized) sums of token log-probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Hypothesis:
    ids: tuple
    logprob: float
    finished: bool = False
    state: object = field(default=None, repr=False, compare=False)


def log_softmax(logits):
    logits = np.asarray(logits, dtype=np.float64)
    m = logits.max()
    return logits - m - np.log(np.exp(logits - m).sum())


def beam_search(stepper, begin_id, end_id, beam_size, max_len):
    """Best hypothesis by raw log-probability.

    Hypotheses end on end_id or at max_len generated tokens; beam_size 1 is
    exact greedy, and beam_size >= vocab^max_len keeps every candidate (an
    exhaustive search on tiny instances).
    """
    if beam_size < 1:
        raise ValueError("beam_size must be >= 1")
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    frontier = [Hypothesis((begin_id,), 0.0, False, stepper.start())]
    finished = []
    for _ in range(max_len):
        if not frontier:
            break
        candidates = []
        for hyp in frontier:
            logprobs, state = stepper.step(hyp.state, hyp.ids[-1])
            logprobs = np.asarray(logprobs)
            if beam_size < logprobs.size:
                top = np.argpartition(-logprobs, beam_size)[:beam_size]
            else:
                top = np.arange(logprobs.size)
            for tok in top:
                candidates.append(
                    Hypothesis(
                        hyp.ids + (int(tok),),
                        hyp.logprob + float(logprobs[tok]),
                        int(tok) == end_id,
                        state,
                    )
                )
        candidates.sort(key=lambda h: -h.logprob)
        kept = candidates[:beam_size]
        frontier = [h for h in kept if not h.finished]
        finished.extend(h for h in kept if h.finished)
    pool = finished + frontier
    best = max(pool, key=lambda h: h.logprob)
    assert best.ids[0] == begin_id
    assert not best.finished or best.ids[-1] == end_id
    return best
