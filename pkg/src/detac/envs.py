"""Desk-scale environments: single-state quadratic bandits, a 1-D point-mass
control task, and tabular finite MDPs used by the exact solvers.

Environments are stateless objects: ``reset(rng)`` returns a start state and
``step(state, action, rng)`` returns ``(next_state, reward, terminal)``.
Episode horizons are enforced by the caller (see ``EnvSpec.horizon``).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)


@dataclass
class EnvSpec:
    state_dim: int
    action_dim: int
    action_low: np.ndarray
    action_high: np.ndarray
    horizon: int
    gamma: float

    def __post_init__(self):
        if self.action_dim < 1:
            raise ValueError("action_dim must be >= 1")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        self.action_low = np.broadcast_to(
            np.asarray(self.action_low, dtype=float), (self.action_dim,)).copy()
        self.action_high = np.broadcast_to(
            np.asarray(self.action_high, dtype=float), (self.action_dim,)).copy()
        if not np.all(np.isfinite(self.action_low)) or \
           not np.all(np.isfinite(self.action_high)) or \
           np.any(self.action_high <= self.action_low):
            raise ValueError("action bounds must be finite and non-degenerate")


def _check_action(spec, action):
    action = np.asarray(action, dtype=float).reshape(-1)
    if action.shape != (spec.action_dim,):
        raise ValueError(f"action has dimension {action.size}, expected {spec.action_dim}")
    if not np.all(np.isfinite(action)):
        raise ValueError("non-finite action")
    clipped = np.clip(action, spec.action_low, spec.action_high)
    if np.any(clipped != action):
        log.warning("action out of bounds, clipping: %s", action)
    return clipped


class QuadraticBandit:
    """One state, horizon one, reward -||a - a*||^2, maximized at a*."""

    def __init__(self, target):
        self.target = np.asarray(target, dtype=float).reshape(-1)
        m = self.target.size
        self.spec = EnvSpec(state_dim=1, action_dim=m,
                            action_low=-1.0, action_high=1.0,
                            horizon=1, gamma=0.0)

    def reset(self, rng=None):
        return np.zeros(1)

    def step(self, state, action, rng=None):
        a = _check_action(self.spec, action)
        reward = -float(np.sum((a - self.target) ** 2))
        return np.zeros(1), reward, True


def make_quadratic_bandit(m, seed):
    """Bandit with the target drawn uniformly in [-0.8, 0.8]^m."""
    if m < 1:
        raise ValueError("action dimension must be >= 1")
    rng = np.random.default_rng(seed)
    return QuadraticBandit(rng.uniform(-0.8, 0.8, size=m))


class PointMass:
    """1-D double integrator: drive the position to a goal with small effort.

    State is (position, velocity), both clipped to [-2, 2]; the action is a
    bounded acceleration.  Reward is -(position - goal)^2 - 0.01 ||a||^2,
    so returns are never positive and the optimum is to park on the goal.
    """

    DT = 0.1
    STATE_BOUND = 2.0

    def __init__(self, goal=0.5, horizon=100, gamma=0.99):
        self.goal = float(goal)
        self.spec = EnvSpec(state_dim=2, action_dim=1,
                            action_low=-1.0, action_high=1.0,
                            horizon=horizon, gamma=gamma)

    def reset(self, rng=None):
        return np.zeros(2)

    def step(self, state, action, rng=None):
        a = _check_action(self.spec, action)
        pos, vel = float(state[0]), float(state[1])
        vel = np.clip(vel + self.DT * a[0], -self.STATE_BOUND, self.STATE_BOUND)
        pos = np.clip(pos + self.DT * vel, -self.STATE_BOUND, self.STATE_BOUND)
        reward = -(pos - self.goal) ** 2 - 0.01 * float(np.sum(a * a))
        return np.array([pos, vel]), float(reward), False


class FiniteMdp:
    """Tabular MDP with discrete actions, used as an exact oracle target.

    ``transitions[s, a]`` is a distribution over next states, ``rewards[s, a]``
    a scalar, ``start`` the initial-state distribution.  ``terminal`` marks
    absorbing states at which episodes end.
    """

    def __init__(self, transitions, rewards, start, gamma, terminal=None):
        self.transitions = np.asarray(transitions, dtype=float)
        self.rewards = np.asarray(rewards, dtype=float)
        self.start = np.asarray(start, dtype=float)
        self.gamma = float(gamma)
        n, k, n2 = self.transitions.shape
        if n != n2 or self.rewards.shape != (n, k) or self.start.shape != (n,):
            raise ValueError("inconsistent MDP shapes")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        row_sums = self.transitions.sum(axis=2)
        if np.max(np.abs(row_sums - 1.0)) > 1e-12:
            raise ValueError("transition rows must sum to 1 (tol 1e-12)")
        if np.any(self.transitions < 0) or np.any(self.transitions > 1):
            raise ValueError("transition probabilities must lie in [0, 1]")
        if abs(self.start.sum() - 1.0) > 1e-12 or np.any(self.start < 0):
            raise ValueError("start distribution must be a distribution")
        self.terminal = (np.zeros(n, dtype=bool) if terminal is None
                         else np.asarray(terminal, dtype=bool))
        self.n_states = n
        self.n_actions = k

    def reset(self, rng):
        return int(rng.choice(self.n_states, p=self.start))

    def step(self, state, action, rng):
        a = int(action)
        if not 0 <= a < self.n_actions:
            raise ValueError(f"action {a} out of range")
        s2 = int(rng.choice(self.n_states, p=self.transitions[int(state), a]))
        r = float(self.rewards[int(state), a])
        return s2, r, bool(self.terminal[s2])

    # -- text round-trip: header "n k gamma", P rows, R rows, then T0 --------

    def save(self, path):
        lines = [f"{self.n_states} {self.n_actions} {self.gamma!r}"]
        for s in range(self.n_states):
            for a in range(self.n_actions):
                lines.append(" ".join(repr(float(p)) for p in self.transitions[s, a]))
        for s in range(self.n_states):
            lines.append(" ".join(repr(float(r)) for r in self.rewards[s]))
        lines.append(" ".join(repr(float(p)) for p in self.start))
        with open(path, "w") as f:
            f.write("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path):
        with open(path) as f:
            tokens = f.read().split()
        n, k = int(tokens[0]), int(tokens[1])
        gamma = float(tokens[2])
        vals = np.array([float(t) for t in tokens[3:]])
        need = n * k * n + n * k + n
        if vals.size != need:
            raise ValueError(f"{path}: expected {need} values, found {vals.size}")
        p = vals[:n * k * n].reshape(n, k, n)
        r = vals[n * k * n:n * k * n + n * k].reshape(n, k)
        t0 = vals[n * k * n + n * k:]
        return cls(p, r, t0, gamma)


def random_finite_mdp(n_states, n_actions, gamma, rng):
    """Dense random MDP with Dirichlet rows and uniform rewards in [-1, 1]."""
    p = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    p /= p.sum(axis=2, keepdims=True)
    r = rng.uniform(-1.0, 1.0, size=(n_states, n_actions))
    t0 = rng.dirichlet(np.ones(n_states))
    t0 /= t0.sum()
    return FiniteMdp(p, r, t0, gamma)
