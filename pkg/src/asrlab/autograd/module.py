"""Parameter containers: a minimal Module base with named traversal."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


def Parameter(data, name=None):
    """A trainable tensor."""
    return Tensor(np.asarray(data), requires_grad=True, name=name)


def glorot(rng, shape, dtype=np.float32):
    """Glorot-uniform init; fan counts from the trailing two axes."""
    if len(shape) >= 2:
        fan_in, fan_out = shape[-2], shape[-1]
    else:
        fan_in = fan_out = shape[0]
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


class Module:
    """Base for layers; discovers parameters by walking attributes.

    Attributes may be Tensors, Modules, or lists/dicts of either. Traversal
    order is attribute insertion order (dicts by sorted key), so parameter
    names are stable across builds of the same config.
    """

    def named_parameters(self, prefix=""):
        out = []
        for key, val in vars(self).items():
            out.extend(_collect(f"{prefix}{key}", val))
        return out

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def zero_grad(self):
        for p in self.parameters():
            p.grad = None

    def num_params(self):
        return sum(p.data.size for p in self.parameters())

    def state_dict(self):
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state):
        params = dict(self.named_parameters())
        missing = sorted(set(params) - set(state))
        unexpected = sorted(set(state) - set(params))
        if missing or unexpected:
            raise KeyError(f"state mismatch: missing={missing} unexpected={unexpected}")
        for name, p in params.items():
            arr = np.asarray(state[name])
            if arr.shape != p.data.shape:
                raise ValueError(
                    f"parameter {name}: checkpoint shape {arr.shape} != model shape {p.data.shape}"
                )
            p.data = arr.astype(p.data.dtype, copy=True)

    def astype(self, dtype):
        """Cast all parameters in place (used for 64-bit gradient checks)."""
        for p in self.parameters():
            p.data = p.data.astype(dtype)
        return self


def _collect(name, val):
    if isinstance(val, Tensor):
        return [(name, val)] if val.requires_grad else []
    if isinstance(val, Module):
        return val.named_parameters(prefix=name + ".")
    if isinstance(val, (list, tuple)):
        out = []
        for i, item in enumerate(val):
            out.extend(_collect(f"{name}.{i}", item))
        return out
    if isinstance(val, dict):
        out = []
        for key in sorted(val):
            out.extend(_collect(f"{name}.{key}", val[key]))
        return out
    return []
