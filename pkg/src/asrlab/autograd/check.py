"""Graph wrapper and central-difference gradient checking."""

from __future__ import annotations

import numpy as np

from .tensor import NumericError, Tensor

MAX_CHECK_SCALARS = 10_000


class Graph:
    """Named-input wrapper around a composition of primitives.

    `fn` maps keyword Tensor arguments to a Tensor or a dict of Tensors.
    forward validates inputs and retains outputs; backward seeds them.
    """

    def __init__(self, fn):
        self.fn = fn
        self.outputs = None
        self._inputs = None

    def forward(self, **inputs):
        for name, t in inputs.items():
            if isinstance(t, Tensor) and not np.all(np.isfinite(t.data)):
                raise NumericError(f"non-finite values in input tensor {name!r}")
        self._inputs = inputs
        out = self.fn(**inputs)
        self.outputs = out if isinstance(out, dict) else {"output": out}
        return self.outputs

    def backward(self, seeds=None):
        if self.outputs is None:
            raise RuntimeError("backward called before forward")
        for name, t in self.outputs.items():
            seed = None if seeds is None else seeds.get(name)
            if seed is None and t.data.ndim != 0:
                continue
            t.backward(seed)

    def reset(self):
        self.outputs = None
        self._inputs = None


def gradient_check(fn, params, epsilon=1e-5, tolerance=None):
    """Compare analytic gradients of scalar `fn()` against central differences.

    params: iterable of Tensors or (name, Tensor) pairs. Returns
    {name: max relative error}, where relative error is
    |analytic - numeric| / max(|analytic|, |numeric|, 1e-8). An empty
    parameter list yields an empty report. With `tolerance` set, raises
    if any parameter exceeds it.

    `fn` must be deterministic; it is re-evaluated 2 times per scalar.
    """
    named = []
    for i, p in enumerate(params):
        if isinstance(p, tuple):
            named.append(p)
        else:
            named.append((p.name or f"param{i}", p))

    total = sum(p.data.size for _, p in named)
    if total >= MAX_CHECK_SCALARS:
        raise ValueError(
            f"gradient_check limited to < {MAX_CHECK_SCALARS} scalars, got {total}"
        )

    for _, p in named:
        p.grad = None
    loss = fn()
    if loss.data.ndim != 0:
        raise ValueError("gradient_check expects fn() to return a scalar loss")
    loss.backward()
    analytic = {
        name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
        for name, p in named
    }

    report = {}
    for name, p in named:
        flat = p.data.reshape(-1)
        worst = 0.0
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + epsilon
            up = float(fn().data)
            flat[j] = orig - epsilon
            down = float(fn().data)
            flat[j] = orig
            numeric = (up - down) / (2.0 * epsilon)
            a = float(analytic[name].reshape(-1)[j])
            rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, rel)
        report[name] = worst

    if tolerance is not None:
        bad = {k: v for k, v in report.items() if v > tolerance}
        if bad:
            raise AssertionError(f"gradient check failed at tolerance {tolerance}: {bad}")
    return report
