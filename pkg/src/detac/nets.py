"""Dense MLP with manual backpropagation, Adam, and batch normalization.

Everything here operates on a single flat parameter vector so that optimizers
and policy-update rules can treat a network as a point in R^n.  No autodiff
dependency: gradients are written by hand and validated against central
finite differences (see ``gradient_check``).
"""

from __future__ import annotations

import numpy as np

HIDDEN_ACTIVATIONS = ("tanh", "leaky_relu")
OUTPUT_ACTIVATIONS = ("linear", "tanh")

LEAKY_SLOPE = 0.01
BN_EPS = 1e-5
BN_MOMENTUM = 0.9


def _act(name, x):
    if name == "tanh":
        return np.tanh(x)
    if name == "leaky_relu":
        return np.where(x > 0, x, LEAKY_SLOPE * x)
    if name == "linear":
        return x
    raise ValueError(f"unknown activation {name!r}")


def _act_grad(name, x):
    if name == "tanh":
        t = np.tanh(x)
        return 1.0 - t * t
    if name == "leaky_relu":
        return np.where(x > 0, 1.0, LEAKY_SLOPE)
    if name == "linear":
        return np.ones_like(x)
    raise ValueError(f"unknown activation {name!r}")


class MlpNet:
    """Fully connected network with an optional batch-norm on the first
    hidden layer.

    Weight layout per layer: W of shape (n_in, n_out) and bias b of shape
    (n_out,).  The flat parameter vector concatenates (W, b) per layer in
    order, followed by (gamma, beta) when batch norm is enabled.
    """

    def __init__(self, layer_sizes, hidden="tanh", output="linear",
                 batch_norm=False, rng=None):
        if len(layer_sizes) < 2 or any(int(n) <= 0 for n in layer_sizes):
            raise ValueError("layer_sizes must be >= 2 positive integers")
        if hidden not in HIDDEN_ACTIVATIONS:
            raise ValueError(f"hidden activation must be one of {HIDDEN_ACTIVATIONS}")
        if output not in OUTPUT_ACTIVATIONS:
            raise ValueError(f"output activation must be one of {OUTPUT_ACTIVATIONS}")
        self.layer_sizes = [int(n) for n in layer_sizes]
        self.hidden = hidden
        self.output = output
        self.batch_norm = bool(batch_norm) and len(layer_sizes) > 2
        rng = rng if rng is not None else np.random.default_rng(0)

        self.weights = []
        self.biases = []
        for n_in, n_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            bound = 1.0 / np.sqrt(n_in)
            self.weights.append(rng.uniform(-bound, bound, size=(n_in, n_out)))
            self.biases.append(np.zeros(n_out))

        if self.batch_norm:
            n1 = self.layer_sizes[1]
            self.bn_gamma = np.ones(n1)
            self.bn_beta = np.zeros(n1)
            self.bn_running_mean = np.zeros(n1)
            self.bn_running_var = np.ones(n1)

        self._cache = None

    # -- parameter vector ---------------------------------------------------

    @property
    def num_params(self):
        n = sum(w.size + b.size for w, b in zip(self.weights, self.biases))
        if self.batch_norm:
            n += 2 * self.layer_sizes[1]
        return n

    def get_params(self):
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b.ravel())
        if self.batch_norm:
            parts.append(self.bn_gamma)
            parts.append(self.bn_beta)
        return np.concatenate(parts)

    def set_params(self, flat):
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (self.num_params,):
            raise ValueError(f"expected {self.num_params} parameters, got {flat.shape}")
        i = 0
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            self.weights[k] = flat[i:i + w.size].reshape(w.shape).copy()
            i += w.size
            self.biases[k] = flat[i:i + b.size].copy()
            i += b.size
        if self.batch_norm:
            n1 = self.layer_sizes[1]
            self.bn_gamma = flat[i:i + n1].copy()
            i += n1
            self.bn_beta = flat[i:i + n1].copy()
        self._cache = None

    def copy(self):
        other = MlpNet(self.layer_sizes, self.hidden, self.output,
                       batch_norm=self.batch_norm)
        other.set_params(self.get_params())
        if self.batch_norm:
            other.bn_running_mean = self.bn_running_mean.copy()
            other.bn_running_var = self.bn_running_var.copy()
        return other

    # -- forward / backward -------------------------------------------------

    def forward(self, x, training=False):
        """Run the network on a batch (or single input).

        Caches intermediate activations so that ``backward`` can be called
        with an upstream gradient of the same batch shape.  In training mode
        batch statistics are used for normalization and the running stats
        are updated; in evaluation mode only the running stats are read.
        """
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.shape[1] != self.layer_sizes[0]:
            raise ValueError(
                f"input width {x.shape[1]} does not match first layer "
                f"size {self.layer_sizes[0]}")
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite input")

        cache = {"x": x, "training": training, "pre": [], "post": [x]}
        h = x
        n_layers = len(self.weights)
        for k in range(n_layers):
            z = h @ self.weights[k] + self.biases[k]
            if k == 0 and self.batch_norm:
                z, bn_cache = self._bn_forward(z, training)
                cache["bn"] = bn_cache
            cache["pre"].append(z)
            name = self.output if k == n_layers - 1 else self.hidden
            h = _act(name, z)
            cache["post"].append(h)
        self._cache = cache
        return h[0] if single else h

    def _bn_forward(self, z, training):
        if training:
            if z.shape[0] < 1:
                raise ValueError("training-mode batch norm needs batch size >= 1")
            mean = z.mean(axis=0)
            var = z.var(axis=0)
            self.bn_running_mean = (BN_MOMENTUM * self.bn_running_mean
                                    + (1 - BN_MOMENTUM) * mean)
            self.bn_running_var = (BN_MOMENTUM * self.bn_running_var
                                   + (1 - BN_MOMENTUM) * var)
        else:
            mean = self.bn_running_mean
            var = self.bn_running_var
        inv_std = 1.0 / np.sqrt(var + BN_EPS)
        z_hat = (z - mean) * inv_std
        out = self.bn_gamma * z_hat + self.bn_beta
        return out, {"z_hat": z_hat, "inv_std": inv_std, "training": training}

    def backward(self, grad_out):
        """Backpropagate an upstream gradient through the cached forward pass.

        ``grad_out`` holds d(loss)/d(output) per batch row; the return value
        is d(loss)/d(params) as one flat vector (summed over the batch).
        """
        if self._cache is None:
            raise RuntimeError("backward called without a cached forward pass")
        cache = self._cache
        grad_out = np.asarray(grad_out, dtype=float)
        if grad_out.ndim == 1:
            grad_out = grad_out[None, :]
        if grad_out.shape != cache["post"][-1].shape:
            raise ValueError("upstream gradient shape does not match cached batch")

        n_layers = len(self.weights)
        grads_w = [None] * n_layers
        grads_b = [None] * n_layers
        grad_bn_gamma = grad_bn_beta = None

        g = grad_out
        for k in reversed(range(n_layers)):
            name = self.output if k == n_layers - 1 else self.hidden
            gz = g * _act_grad(name, cache["pre"][k])
            if k == 0 and self.batch_norm:
                bn = cache["bn"]
                grad_bn_gamma = (gz * bn["z_hat"]).sum(axis=0)
                grad_bn_beta = gz.sum(axis=0)
                gz = self._bn_backward(gz, bn)
            h_in = cache["post"][k]
            grads_w[k] = h_in.T @ gz
            grads_b[k] = gz.sum(axis=0)
            g = gz @ self.weights[k].T

        parts = []
        for gw, gb in zip(grads_w, grads_b):
            parts.append(gw.ravel())
            parts.append(gb)
        if self.batch_norm:
            parts.append(grad_bn_gamma)
            parts.append(grad_bn_beta)
        return np.concatenate(parts)

    def _bn_backward(self, g_out, bn):
        g_hat = g_out * self.bn_gamma
        if not bn["training"]:
            return g_hat * bn["inv_std"]
        n = g_hat.shape[0]
        z_hat = bn["z_hat"]
        # standard batch-norm backward through batch mean and variance
        return (bn["inv_std"] / n) * (
            n * g_hat
            - g_hat.sum(axis=0)
            - z_hat * (g_hat * z_hat).sum(axis=0))

    # -- serialization ------------------------------------------------------

    def save(self, path):
        lines = [
            "mlpnet v1",
            "sizes " + " ".join(str(n) for n in self.layer_sizes),
            f"hidden {self.hidden}",
            f"output {self.output}",
            f"batchnorm {int(self.batch_norm)}",
        ]
        vals = [self.get_params()]
        if self.batch_norm:
            vals.append(self.bn_running_mean)
            vals.append(self.bn_running_var)
        flat = np.concatenate(vals)
        lines.append(f"values {flat.size}")
        lines.extend(repr(float(v)) for v in flat)
        with open(path, "w") as f:
            f.write("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path):
        with open(path) as f:
            lines = [ln.strip() for ln in f if ln.strip()]
        if lines[0] != "mlpnet v1":
            raise ValueError(f"not a network snapshot: {path}")
        sizes = [int(t) for t in lines[1].split()[1:]]
        hidden = lines[2].split()[1]
        output = lines[3].split()[1]
        batch_norm = bool(int(lines[4].split()[1]))
        count = int(lines[5].split()[1])
        flat = np.array([float(t) for t in lines[6:6 + count]])
        net = cls(sizes, hidden, output, batch_norm=batch_norm)
        n = net.num_params
        net.set_params(flat[:n])
        if batch_norm:
            n1 = net.layer_sizes[1]
            net.bn_running_mean = flat[n:n + n1].copy()
            net.bn_running_var = flat[n + n1:n + 2 * n1].copy()
        return net


class Adam:
    """Adam state for one flat parameter vector."""

    def __init__(self, size, alpha=1e-3, beta1=0.0, beta2=0.999, eps=1e-8):
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0
        self.alpha = alpha
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps

    def step(self, params, grad, ascent=False):
        """One Adam update; returns the new parameter vector.

        ``grad`` is interpreted as a descent gradient unless ``ascent`` is
        set, in which case the update moves along +grad.
        """
        grad = np.asarray(grad, dtype=float)
        if grad.shape != self.m.shape:
            raise ValueError("gradient shape does not match optimizer state")
        if not np.all(np.isfinite(grad)):
            raise ValueError("non-finite gradient")
        if ascent:
            grad = -grad
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1 ** self.t)
        v_hat = self.v / (1 - self.beta2 ** self.t)
        return params - self.alpha * m_hat / (np.sqrt(v_hat) + self.eps)


def gradient_check(net, x, upstream=None, h=1e-5, training=False):
    """Max relative error between analytic and central-difference gradients.

    The implied scalar loss is sum(upstream * net(x)); a fixed random
    upstream is drawn when none is given.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if upstream is None:
        upstream = np.random.default_rng(0).standard_normal(
            (x.shape[0], net.layer_sizes[-1]))

    # freeze running stats so each finite-difference probe sees the same net
    saved = None
    if net.batch_norm:
        saved = (net.bn_running_mean.copy(), net.bn_running_var.copy())

    def restore():
        if saved is not None:
            net.bn_running_mean = saved[0].copy()
            net.bn_running_var = saved[1].copy()

    net.forward(x, training=training)
    analytic = net.backward(np.asarray(upstream, dtype=float))
    restore()

    theta = net.get_params()
    numeric = np.empty_like(theta)
    for i in range(theta.size):
        for sign, slot in ((1.0, 0), (-1.0, 1)):
            probe = theta.copy()
            probe[i] += sign * h
            net.set_params(probe)
            out = net.forward(x, training=training)
            restore()
            if slot == 0:
                plus = float(np.sum(upstream * out))
            else:
                minus = float(np.sum(upstream * out))
        numeric[i] = (plus - minus) / (2 * h)
    net.set_params(theta)
    restore()

    # floor the denominator at a fraction of the gradient's scale, so that
    # entries whose true derivative is exactly zero (e.g. first-layer biases
    # under batch norm) are judged against roundoff, not against 1e-8
    floor = max(1e-8, 1e-4 * float(np.max(np.abs(analytic) + np.abs(numeric))))
    scale = np.maximum(np.abs(analytic) + np.abs(numeric), floor)
    return float(np.max(np.abs(analytic - numeric) / scale))
