"""Deterministic policy representations and the Gaussian exploration wrapper.

All policies expose a common surface: ``act(state)`` returns the
deterministic action, ``jacobian(state)`` the (action_dim x n_params)
derivative of the action w.r.t. the flat parameter vector, and
``get_params``/``set_params`` move the parameter point.
"""

from __future__ import annotations

import numpy as np

from .nets import MlpNet


def _check_state(state):
    state = np.asarray(state, dtype=float).reshape(-1)
    if not np.all(np.isfinite(state)):
        raise ValueError("non-finite state")
    return state


class MlpPolicy:
    """MLP policy with tanh output, so actions stay inside [-1, 1] bounds."""

    def __init__(self, state_dim, action_dim, hidden_sizes=(32, 32),
                 hidden="tanh", batch_norm=False, rng=None):
        sizes = [state_dim, *hidden_sizes, action_dim]
        self.net = MlpNet(sizes, hidden=hidden, output="tanh",
                          batch_norm=batch_norm, rng=rng)
        self.action_dim = action_dim

    @property
    def n_params(self):
        return self.net.num_params

    def get_params(self):
        return self.net.get_params()

    def set_params(self, flat):
        self.net.set_params(flat)

    def act(self, state):
        return self.net.forward(_check_state(state), training=False)

    def act_batch(self, states, training=False):
        return self.net.forward(np.atleast_2d(states), training=training)

    def jacobian(self, state):
        state = _check_state(state)
        jac = np.empty((self.action_dim, self.n_params))
        for i in range(self.action_dim):
            self.net.forward(state, training=False)
            one_hot = np.zeros(self.action_dim)
            one_hot[i] = 1.0
            jac[i] = self.net.backward(one_hot)
        return jac

    def backward_batch(self, upstream):
        """Parameter gradient of sum_t upstream_t . mu(s_t) for the last
        ``act_batch`` call."""
        return self.net.backward(upstream)

    def copy(self):
        other = MlpPolicy.__new__(MlpPolicy)
        other.net = self.net.copy()
        other.action_dim = self.action_dim
        return other


class LinearPolicy:
    """State-independent policy mu(.) = theta; the bandit representation."""

    def __init__(self, action_dim, low=-1.0, high=1.0, theta=None):
        self.action_dim = action_dim
        self.low = np.broadcast_to(np.asarray(low, float), (action_dim,))
        self.high = np.broadcast_to(np.asarray(high, float), (action_dim,))
        self.theta = (np.zeros(action_dim) if theta is None
                      else np.asarray(theta, dtype=float).copy())

    @property
    def n_params(self):
        return self.action_dim

    def get_params(self):
        return self.theta.copy()

    def set_params(self, flat):
        self.theta = np.asarray(flat, dtype=float).reshape(self.action_dim).copy()

    def act(self, state=None):
        if state is not None:
            _check_state(state)
        return np.clip(self.theta, self.low, self.high)

    def act_batch(self, states, training=False):
        n = np.atleast_2d(states).shape[0]
        return np.tile(self.act(), (n, 1))

    def jacobian(self, state=None):
        return np.eye(self.action_dim)

    def copy(self):
        return LinearPolicy(self.action_dim, self.low, self.high, self.theta)


class TileCoding:
    """Overlapping uniform tilings over a box, producing binary features."""

    def __init__(self, low, high, n_tilings=8, n_tiles=8):
        self.low = np.asarray(low, dtype=float)
        self.high = np.asarray(high, dtype=float)
        self.n_tilings = n_tilings
        self.n_tiles = n_tiles
        self.dim = self.low.size
        self.n_features = n_tilings * n_tiles ** self.dim

    def features(self, state):
        state = np.asarray(state, dtype=float)
        phi = np.zeros(self.n_features)
        span = self.high - self.low
        per_tiling = self.n_tiles ** self.dim
        for t in range(self.n_tilings):
            offset = t / (self.n_tilings * self.n_tiles)
            rel = (state - self.low) / span + offset
            idx = np.clip((rel * self.n_tiles).astype(int), 0, self.n_tiles - 1)
            flat = 0
            for d in range(self.dim):
                flat = flat * self.n_tiles + int(idx[d])
            phi[t * per_tiling + flat] = 1.0
        return phi


class TileCodingPolicy:
    """Linear-in-features policy mu(s) = Theta phi(s), clipped to bounds."""

    def __init__(self, coder, action_dim, low=-1.0, high=1.0):
        self.coder = coder
        self.action_dim = action_dim
        self.low = np.broadcast_to(np.asarray(low, float), (action_dim,))
        self.high = np.broadcast_to(np.asarray(high, float), (action_dim,))
        self.theta = np.zeros((action_dim, coder.n_features))

    @property
    def n_params(self):
        return self.theta.size

    def get_params(self):
        return self.theta.ravel().copy()

    def set_params(self, flat):
        self.theta = np.asarray(flat, dtype=float).reshape(self.theta.shape).copy()

    def act(self, state):
        phi = self.coder.features(_check_state(state))
        return np.clip(self.theta @ phi, self.low, self.high)

    def act_batch(self, states, training=False):
        return np.stack([self.act(s) for s in np.atleast_2d(states)])

    def jacobian(self, state):
        phi = self.coder.features(_check_state(state))
        jac = np.zeros((self.action_dim, self.theta.size))
        n = self.coder.n_features
        for i in range(self.action_dim):
            jac[i, i * n:(i + 1) * n] = phi
        return jac

    def copy(self):
        other = TileCodingPolicy(self.coder, self.action_dim, self.low, self.high)
        other.theta = self.theta.copy()
        return other


class GaussianExploration:
    """Isotropic truncated Gaussian around a deterministic policy.

    Samples are redrawn until they fall inside the action bounds (at most
    ``max_attempts`` times, then clipped), which keeps the wrapper total
    with means arbitrarily close to a bound.
    """

    def __init__(self, policy, sigma, low=-1.0, high=1.0, decay=1.0,
                 max_attempts=100):
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        if not 0.0 < decay <= 1.0:
            raise ValueError("decay must lie in (0, 1]")
        self.policy = policy
        self.sigma = float(sigma)
        m = policy.action_dim
        self.low = np.broadcast_to(np.asarray(low, float), (m,))
        self.high = np.broadcast_to(np.asarray(high, float), (m,))
        self.decay = float(decay)
        self.max_attempts = max_attempts

    def act(self, state, rng):
        mu = np.asarray(self.policy.act(state), dtype=float).reshape(-1)
        for _ in range(self.max_attempts):
            a = mu + self.sigma * rng.standard_normal(mu.size)
            if np.all(a >= self.low) and np.all(a <= self.high):
                return a
        return np.clip(a, self.low, self.high)

    def anneal(self):
        self.sigma *= self.decay
