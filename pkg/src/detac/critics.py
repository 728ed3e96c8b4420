"""Value-function learning: TD errors, lambda-returns, fitted value
iteration, and the compatible-feature Q critic used by the SPG/DPG
baselines.

Critics share a small surface: ``value(state)``, ``values(states)``,
``regress(states, targets)`` (one fitting pass toward fixed targets) and
``td_update(state, delta, lr)`` for incremental TD(0).
"""

from __future__ import annotations

import numpy as np

from .nets import Adam, MlpNet


class MlpVCritic:
    """MLP state-value function; each regression pass is one full-batch
    Adam step on the squared error, so repeated fitted iterations drive the
    fit."""

    def __init__(self, state_dim, hidden_sizes=(32, 32), hidden="tanh",
                 lr=1e-3, beta1=0.0, beta2=0.999, eps=1e-8, rng=None):
        self.net = MlpNet([state_dim, *hidden_sizes, 1], hidden=hidden,
                          output="linear", rng=rng)
        self.adam = Adam(self.net.num_params, alpha=lr,
                         beta1=beta1, beta2=beta2, eps=eps)

    def value(self, state):
        return float(self.net.forward(np.asarray(state, float).reshape(-1))[0])

    def values(self, states):
        return self.net.forward(np.atleast_2d(states))[:, 0]

    def regress(self, states, targets):
        states = np.atleast_2d(states)
        targets = np.asarray(targets, dtype=float).reshape(-1)
        pred = self.net.forward(states)
        upstream = (2.0 / len(targets)) * (pred - targets[:, None])
        grad = self.net.backward(upstream)
        self.net.set_params(self.adam.step(self.net.get_params(), grad))

    def td_update(self, state, delta, lr):
        # v <- v + lr * delta * grad V(s)
        self.net.forward(np.asarray(state, float).reshape(-1))
        grad = self.net.backward(np.ones(1))
        self.net.set_params(self.net.get_params() + lr * delta * grad)


class TabularVCritic:
    """Exact table over integer states; a regression pass solves the least
    squares fit in closed form (per-state mean of the targets)."""

    def __init__(self, n_states):
        self.v = np.zeros(n_states)

    def value(self, state):
        return float(self.v[int(np.asarray(state).reshape(-1)[0])])

    def values(self, states):
        idx = np.asarray(states).reshape(len(states), -1)[:, 0].astype(int)
        return self.v[idx]

    def regress(self, states, targets):
        idx = np.asarray(states).reshape(len(states), -1)[:, 0].astype(int)
        targets = np.asarray(targets, dtype=float).reshape(-1)
        for s in np.unique(idx):
            self.v[s] = targets[idx == s].mean()

    def td_update(self, state, delta, lr):
        self.v[int(np.asarray(state).reshape(-1)[0])] += lr * delta


class ConstantVCritic:
    """Single-parameter value function: V(s) = v for every state."""

    def __init__(self, v0=0.0):
        self.v = float(v0)

    def value(self, state):
        return self.v

    def values(self, states):
        return np.full(len(states), self.v)

    def regress(self, states, targets):
        self.v = float(np.mean(targets))

    def td_update(self, state, delta, lr):
        self.v += lr * delta


def td_error(critic, transition, gamma):
    """delta = r + gamma V(s') (1 - terminal) - V(s)."""
    s, _a, r, s2, terminal = transition
    bootstrap = 0.0 if terminal else gamma * critic.value(s2)
    return r + bootstrap - critic.value(s)


def lambda_returns(trajectory, critic, gamma, lam):
    """Backward-recursive lambda-return targets for one episode.

    G_t = r_t + gamma [(1 - lam) V(s_{t+1}) + lam G_{t+1}], with the
    recursion seeded by V(s_T) so a horizon cut bootstraps and a true
    terminal contributes no tail value.
    """
    if len(trajectory) == 0:
        raise ValueError("empty trajectory")
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
    next_values = critic.values(trajectory.next_states)
    rewards = np.asarray(trajectory.rewards)
    terminals = np.asarray(trajectory.terminals, dtype=bool)
    targets = np.empty(len(rewards))
    g_next = next_values[-1]
    for t in range(len(rewards) - 1, -1, -1):
        if terminals[t]:
            tail = 0.0
        else:
            tail = gamma * ((1 - lam) * next_values[t] + lam * g_next)
        targets[t] = rewards[t] + tail
        g_next = targets[t]
    return targets


def fitted_value_iteration(critic, trajectories, gamma, lam, n_iterations):
    """Repeatedly recompute lambda-return targets with the current critic
    and take one regression pass toward them."""
    if n_iterations < 1:
        raise ValueError("n_iterations must be >= 1")
    if not trajectories:
        raise ValueError("empty batch")
    states = np.concatenate(
        [t.state_array().reshape(len(t), -1) for t in trajectories])
    for _ in range(n_iterations):
        targets = np.concatenate(
            [lambda_returns(t, critic, gamma, lam) for t in trajectories])
        critic.regress(states, targets)
    return critic


class CompatibleQCritic:
    """Q(s, a) = (a - mu(s))^T J_mu(s) w + psi(s)^T v.

    ``J_mu`` is the policy's parameter Jacobian, so grad_a Q at a = mu(s) is
    exactly J_mu(s)^T w, and Q(s, mu(s)) = psi(s)^T v by construction.
    """

    def __init__(self, policy, state_features=None, ridge=1e-6):
        self.policy = policy
        self.state_features = state_features or (lambda s: np.ones(1))
        self.ridge = ridge
        self.w = np.zeros(policy.n_params)
        probe = self.state_features(None)
        self.v = np.zeros(np.asarray(probe).size)

    def _advantage_features(self, state, action):
        mu = np.asarray(self.policy.act(state), float).reshape(-1)
        jac = self.policy.jacobian(state)
        return (np.asarray(action, float).reshape(-1) - mu) @ jac

    def q(self, state, action):
        return float(self._advantage_features(state, action) @ self.w
                     + self.state_features(state) @ self.v)

    def value(self, state):
        return float(self.state_features(state) @ self.v)

    def advantage(self, state, action):
        return float(self._advantage_features(state, action) @ self.w)

    def grad_a(self, state):
        return self.policy.jacobian(state) @ self.w

    def fit(self, states, actions, targets):
        """Ridge least squares of (w, v) on the stacked features."""
        targets = np.asarray(targets, dtype=float).reshape(-1)
        rows = []
        for s, a in zip(states, actions):
            rows.append(np.concatenate(
                [self._advantage_features(s, a), self.state_features(s)]))
        x = np.stack(rows)
        reg = self.ridge * np.eye(x.shape[1])
        sol = np.linalg.solve(x.T @ x + reg, x.T @ targets)
        self.w = sol[:self.w.size]
        self.v = sol[self.w.size:]

    def sgd_fit_step(self, state, action, target, lr):
        """One stochastic gradient step on the squared Bellman residual."""
        feat_w = self._advantage_features(state, action)
        feat_v = self.state_features(state)
        err = target - (feat_w @ self.w + feat_v @ self.v)
        self.w += lr * err * feat_w
        self.v += lr * err * feat_v
