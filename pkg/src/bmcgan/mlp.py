"""Small dense networks on a flat parameter vector with hand-derived backprop.

Parameter layout: for each layer in order, the weight matrix of shape
``(fan_out, fan_in)`` in row-major order followed by the bias of length
``fan_out``. A layer computes ``y = x @ W.T + b``; hidden layers apply the
activation, the output layer is the identity.

Gradient convention used by :meth:`Mlp.backward`: ``upstream[i]`` is the
derivative of a per-sample scalar with respect to output ``i``. Parameter
gradients are averaged over the batch; input gradients are per-sample.
"""
from dataclasses import dataclass

import numpy as np

ACTIVATIONS = ("tanh", "relu")


@dataclass(frozen=True)
class Mlp:
    widths: tuple
    activation: str = "tanh"

    def __post_init__(self):
        widths = tuple(int(w) for w in self.widths)
        if len(widths) < 2 or min(widths) < 1:
            raise ValueError(f"need at least input and output widths >= 1, got {self.widths!r}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")
        object.__setattr__(self, "widths", widths)

    @property
    def n_params(self):
        return sum((a + 1) * b for a, b in zip(self.widths, self.widths[1:]))

    @property
    def layout(self):
        """List of ``(weight_offset, (fan_out, fan_in), bias_offset)`` per layer."""
        out = []
        off = 0
        for fan_in, fan_out in zip(self.widths, self.widths[1:]):
            out.append((off, (fan_out, fan_in), off + fan_in * fan_out))
            off += (fan_in + 1) * fan_out
        return out

    def unpack(self, params):
        params = np.asarray(params)
        if params.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got shape {params.shape}")
        layers = []
        for w_off, shape, b_off in self.layout:
            W = params[w_off:b_off].reshape(shape)
            layers.append((W, params[b_off:b_off + shape[0]]))
        return layers

    def init(self, rng, zero_last=False):
        """Gaussian weights with variance ``1 / fan_in`` and zero biases."""
        params = np.zeros(self.n_params)
        layout = self.layout
        for i, (w_off, (fan_out, fan_in), b_off) in enumerate(layout):
            if zero_last and i == len(layout) - 1:
                continue
            params[w_off:b_off] = rng.standard_normal(fan_out * fan_in) / np.sqrt(fan_in)
        return params

    def _act(self, z):
        if self.activation == "tanh":
            return np.tanh(z)
        return np.maximum(z, 0.0)

    def _act_grad(self, z, a):
        if self.activation == "tanh":
            return 1.0 - a * a
        return (z > 0).astype(z.dtype)

    def _check_input(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.widths[0]:
            raise ValueError(f"input must have shape (n, {self.widths[0]}), got {x.shape}")
        return x

    def forward(self, params, x, keep=False):
        x = self._check_input(x)
        layers = self.unpack(params)
        cache = [x]
        h = x
        for i, (W, b) in enumerate(layers):
            z = h @ W.T + b
            if i < len(layers) - 1:
                a = self._act(z)
                cache.append((z, a))
                h = a
            else:
                h = z
        if keep:
            return h, cache
        return h

    def backward(self, params, cache, upstream):
        layers = self.unpack(params)
        n = cache[0].shape[0]
        g = np.asarray(upstream, dtype=np.float64)
        if g.shape != (n, self.widths[-1]):
            raise ValueError(f"upstream must have shape ({n}, {self.widths[-1]}), got {g.shape}")
        grad = np.zeros(self.n_params)
        layout = self.layout
        for i in range(len(layers) - 1, -1, -1):
            W, _ = layers[i]
            h_in = cache[0] if i == 0 else cache[i][1]
            w_off, shape, b_off = layout[i]
            grad[w_off:b_off] = (g.T @ h_in).ravel() / n
            grad[b_off:b_off + shape[0]] = g.sum(axis=0) / n
            g = g @ W
            if i > 0:
                z, a = cache[i]
                g = g * self._act_grad(z, a)
        return grad, g


def forward_backward(net, params, x, upstream):
    """Outputs, batch-mean parameter gradients and per-sample input gradients."""
    out, cache = net.forward(params, x, keep=True)
    grad, grad_in = net.backward(params, cache, upstream)
    return out, grad, grad_in
