"""Policy-update rules as pure functions from (policy, critic, data) to a
direction in parameter space.

All directions use the ascent convention theta <- theta + alpha * g, so the
gated rules (which the source formulation writes as descent on
(mu(s) - a)) come out here as movement toward the sampled action.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BETA_MIN = 1e-6
BETA_MAX = 1e6


@dataclass
class UpdateDirection:
    vector: np.ndarray
    rule: str

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=float)
        if not np.all(np.isfinite(self.vector)):
            raise ValueError("non-finite update direction")


@dataclass
class TrustRegionState:
    """Adaptive penalty coefficient and the snapshot of the pre-update policy."""

    d_target: float = 0.03
    beta: float = 1.0
    snapshot: object = None
    gathered_states: list = field(default_factory=list)


def _toward_action(policy, state, action):
    mu = np.asarray(policy.act(state), float).reshape(-1)
    return (np.asarray(action, float).reshape(-1) - mu) @ policy.jacobian(state)


def cacla_direction(policy, state, action, delta):
    """Move toward the sampled action iff its TD error is positive;
    H(0) = 0, so a zero advantage produces no update."""
    if delta > 0:
        g = _toward_action(policy, state, action)
    else:
        g = np.zeros(policy.n_params)
    return UpdateDirection(g, "cacla")


def cac_direction(policy, state, action, delta):
    """Gated move toward the action, scaled by the positive TD error."""
    if delta > 0:
        g = delta * _toward_action(policy, state, action)
    else:
        g = np.zeros(policy.n_params)
    return UpdateDirection(g, "cac")


def spg_direction(policy, sigma, state, action, advantage):
    """Single-sample likelihood-ratio gradient for the Gaussian policy:
    A(s,a) (a - mu(s))^T J_mu(s) / sigma^2."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    g = (advantage / sigma ** 2) * _toward_action(policy, state, action)
    return UpdateDirection(g, "spg")


def dpg_direction(policy, state, grad_a):
    """Chain rule through the critic's action gradient at a = mu(s)."""
    g = np.asarray(grad_a, float).reshape(-1) @ policy.jacobian(state)
    return UpdateDirection(g, "dpg")


def policy_distance_dhat(snapshot, policy, states):
    """d_hat = (1 / sqrt(m L)) sum_s ||mu_old(s) - mu(s)||_2 over the L
    gathered states (a sqrt(L)-scaled sum, not an average)."""
    states = list(states)
    if not states:
        raise ValueError("empty state set")
    m = policy.action_dim
    total = 0.0
    for s in states:
        diff = np.asarray(snapshot.act(s), float) - np.asarray(policy.act(s), float)
        total += float(np.linalg.norm(diff))
    return total / np.sqrt(m * len(states))


def adapt_beta(trust, d_hat):
    """Halve/double the penalty coefficient when the policy moved too
    little/too much relative to the target distance."""
    if trust.beta <= 0:
        raise ValueError("beta must be positive")
    if d_hat < trust.d_target / 1.5:
        trust.beta /= 2.0
    elif d_hat > trust.d_target * 1.5:
        trust.beta *= 2.0
    trust.beta = float(np.clip(trust.beta, BETA_MIN, BETA_MAX))
    return trust.beta


def penfac_actor_gradient(policy, snapshot, states, actions, advantages, beta):
    """Mean gated TD-scaled direction plus the quadratic pull toward the
    snapshot policy:

        g = mean_t [ cac(s_t, a_t, A_t) - 2 beta (mu(s_t) - mu_old(s_t))^T J_mu(s_t) ]

    The snapshot is treated as a constant (no gradient flows through it).
    """
    states = list(states)
    if not (len(states) == len(actions) == len(advantages)):
        raise ValueError("states, actions and advantages must have equal length")
    if not states:
        raise ValueError("empty batch")
    g = np.zeros(policy.n_params)
    for s, a, adv in zip(states, actions, advantages):
        if adv > 0:
            g += adv * _toward_action(policy, s, a)
        drift = (np.asarray(policy.act(s), float).reshape(-1)
                 - np.asarray(snapshot.act(s), float).reshape(-1))
        g -= 2.0 * beta * (drift @ policy.jacobian(s))
    return UpdateDirection(g / len(states), "penfac")


def batch_gated_direction(policy, states, actions, advantages,
                          scale_by_delta, snapshot=None, beta=0.0,
                          training=False):
    """Batched equivalent of the gated rules (and the penalty term) using a
    single forward/backward pass; used by the batch agents where per-state
    Jacobians would be too slow.

    Returns the mean direction over the batch in the ascent convention.
    """
    states = np.stack([np.asarray(s, float).reshape(-1) for s in states])
    actions = np.stack([np.asarray(a, float).reshape(-1) for a in actions])
    advantages = np.asarray(advantages, dtype=float)
    mu = policy.act_batch(states, training=training)
    gate = (advantages > 0).astype(float)
    weight = gate * advantages if scale_by_delta else gate
    upstream = weight[:, None] * (actions - mu)
    if snapshot is not None and beta != 0.0:
        mu_old = snapshot.act_batch(states)
        upstream -= 2.0 * beta * (mu - mu_old)
    return policy.backward_batch(upstream) / len(states)


def ro_accept(critic, state, a_current, a_proposed, r_proposed,
              next_state_proposed, gamma):
    """Action-space hill climbing: keep the proposal iff its one-step
    bootstrapped value strictly improves on V(s)."""
    if r_proposed + gamma * critic.value(next_state_proposed) > critic.value(state):
        return a_proposed
    return a_current
