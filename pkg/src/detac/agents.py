"""Learning loops: incremental CACLA/CAC, batch NFAC/PeNFAC, and the
single-state bandit baselines (SPG, DPG, CACLA with a one-parameter critic).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .critics import (CompatibleQCritic, ConstantVCritic, MlpVCritic,
                      fitted_value_iteration, lambda_returns, td_error)
from .nets import Adam
from .policies import GaussianExploration, LinearPolicy, MlpPolicy
from .trajectory import Trajectory
from .updates import (TrustRegionState, adapt_beta, batch_gated_direction,
                      cac_direction, cacla_direction, policy_distance_dhat,
                      ro_accept)

RULES = ("cacla", "cac", "nfac", "penfac", "spg", "dpg")


@dataclass
class AgentConfig:
    rule: str = "penfac"
    gamma: float = 0.99
    lam: float = 0.9
    sigma: float = np.sqrt(0.2)
    sigma_decay: float = 1.0
    lr_actor: float = 1e-4
    lr_critic: float = 1e-3
    fitted_iterations: int = 10
    actor_iterations: int = 30
    update_every: int = 5
    d_target: float = 0.03
    batch_norm: bool = True
    hidden: tuple = (32, 32)
    hidden_activation: str = "leaky_relu"
    adam_beta1: float = 0.0
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    random_opt: bool = False

    def __post_init__(self):
        if self.rule not in RULES:
            raise ValueError(f"unknown rule {self.rule!r}")
        if self.gamma < 0 or self.gamma >= 1:
            raise ValueError("gamma must lie in [0, 1)")
        if not 0 <= self.lam <= 1:
            raise ValueError("lambda must lie in [0, 1]")
        if self.sigma <= 0 or self.lr_actor < 0 or self.lr_critic < 0:
            raise ValueError("rates must be positive")
        if self.update_every < 1:
            raise ValueError("update_every must be >= 1")
        if self.fitted_iterations < 1:
            raise ValueError("fitted_iterations must be >= 1")


def run_episode(policy_act, env, rng, horizon=None):
    """Roll one episode; ``policy_act(state)`` supplies the actions."""
    horizon = horizon if horizon is not None else env.spec.horizon
    traj = Trajectory()
    state = env.reset(rng)
    for _ in range(horizon):
        action = policy_act(state)
        next_state, reward, terminal = env.step(state, action, rng)
        traj.append(state, action, reward, next_state, terminal)
        state = next_state
        if terminal:
            break
    return traj


def evaluate_deterministic(policy, env, n_episodes, rng=None):
    """Play the greedy policy; interactions stay out of any training data."""
    rng = rng if rng is not None else np.random.default_rng(0)
    returns = [run_episode(policy.act, env, rng).episode_return
               for _ in range(n_episodes)]
    return float(np.mean(returns)), returns


class IncrementalActorCritic:
    """Per-step CACLA/CAC: TD(0) critic, gated actor step toward the
    exploratory action."""

    def __init__(self, policy, critic, config):
        if config.rule not in ("cacla", "cac"):
            raise ValueError("incremental agent supports the cacla/cac rules")
        self.policy = policy
        self.critic = critic
        self.config = config
        self.exploration = GaussianExploration(
            policy, config.sigma, decay=config.sigma_decay)

    def run_episode(self, env, rng):
        cfg = self.config
        traj = Trajectory()
        state = env.reset(rng)
        for _ in range(env.spec.horizon):
            action = self.exploration.act(state, rng)
            next_state, reward, terminal = env.step(state, action, rng)
            traj.append(state, action, reward, next_state, terminal)

            if cfg.random_opt:
                action = ro_accept(self.critic, state, self.policy.act(state),
                                   action, reward, next_state, cfg.gamma)
            delta = td_error(self.critic, (state, action, reward, next_state,
                                           terminal), cfg.gamma)
            direction = (cac_direction if cfg.rule == "cac"
                         else cacla_direction)(self.policy, state, action, delta)
            if np.any(direction.vector):
                self.policy.set_params(self.policy.get_params()
                                       + cfg.lr_actor * direction.vector)
            self.critic.td_update(state, delta, cfg.lr_critic)

            state = next_state
            if terminal:
                break
        self.exploration.anneal()
        return traj


class BatchActorCritic:
    """NFAC/PeNFAC: gather episodes under the exploratory policy, then fit
    the critic by fitted value iteration and take several Adam steps on the
    gated actor direction (TD-scaled and trust-region-penalized for
    PeNFAC)."""

    def __init__(self, policy, critic, config):
        if config.rule not in ("nfac", "penfac"):
            raise ValueError("batch agent supports the nfac/penfac rules")
        self.policy = policy
        self.critic = critic
        self.config = config
        self.exploration = GaussianExploration(
            policy, config.sigma, decay=config.sigma_decay)
        self.actor_adam = Adam(policy.n_params, alpha=config.lr_actor,
                               beta1=config.adam_beta1, beta2=config.adam_beta2,
                               eps=config.adam_eps)
        self.trust = TrustRegionState(d_target=config.d_target)
        self._batch = []
        self.dhat_history = []

    def run_episode(self, env, rng):
        traj = run_episode(lambda s: self.exploration.act(s, rng), env, rng)
        self._batch.append(traj)
        if len(self._batch) >= self.config.update_every:
            self.update_phase(self._batch)
            self._batch = []
            self.exploration.anneal()
        return traj

    def update_phase(self, batch):
        cfg = self.config
        if not batch:
            raise ValueError("empty batch")
        states = np.concatenate(
            [t.state_array().reshape(len(t), -1) for t in batch])
        if cfg.batch_norm:
            # refresh the first-layer normalization stats on this phase's
            # states once, before the snapshot, so the penalty and d_hat
            # measure pure weight movement under a fixed normalization
            self.policy.act_batch(states, training=True)
        snapshot = self.policy.copy() if cfg.rule == "penfac" else None

        fitted_value_iteration(self.critic, batch, cfg.gamma, cfg.lam,
                               cfg.fitted_iterations)

        actions = np.concatenate(
            [t.action_array().reshape(len(t), -1) for t in batch])
        advantages = np.concatenate(
            [lambda_returns(t, self.critic, cfg.gamma, cfg.lam)
             - self.critic.values(t.state_array().reshape(len(t), -1))
             for t in batch])

        scale_by_delta = cfg.rule == "penfac"
        beta = self.trust.beta if cfg.rule == "penfac" else 0.0
        for _ in range(cfg.actor_iterations):
            g = batch_gated_direction(self.policy, states, actions, advantages,
                                      scale_by_delta=scale_by_delta,
                                      snapshot=snapshot, beta=beta)
            self.policy.set_params(self.actor_adam.step(
                self.policy.get_params(), g, ascent=True))

        if cfg.rule == "penfac":
            d_hat = policy_distance_dhat(snapshot, self.policy, list(states))
            self.dhat_history.append(d_hat)
            adapt_beta(self.trust, d_hat)


def make_agent(config, env, rng):
    """Build the policy/critic pair matching the rule and environment."""
    state_dim = env.spec.state_dim
    action_dim = env.spec.action_dim
    policy = MlpPolicy(state_dim, action_dim, hidden_sizes=config.hidden,
                       hidden=config.hidden_activation,
                       batch_norm=config.batch_norm, rng=rng)
    critic = MlpVCritic(state_dim, hidden_sizes=config.hidden,
                        hidden=config.hidden_activation, lr=config.lr_critic,
                        beta1=config.adam_beta1, beta2=config.adam_beta2,
                        eps=config.adam_eps, rng=rng)
    if config.rule in ("cacla", "cac"):
        return IncrementalActorCritic(policy, critic, config)
    if config.rule in ("nfac", "penfac"):
        return BatchActorCritic(policy, critic, config)
    raise ValueError(f"rule {config.rule!r} is bandit-only; use run_bandit")


# ---------------------------------------------------------------------------
# single-state bandit baselines
# ---------------------------------------------------------------------------

@dataclass
class BanditConfig:
    sigma: float = 0.3
    sigma_decay: float = 0.999
    sigma_min: float = 0.15
    lr_actor: float = 0.02
    lr_actor_decay: float = 0.999
    lr_actor_min: float = 0.002
    lr_critic: float = 0.1


def run_bandit(rule, env, episodes, config, rng, eval_every=1):
    """One-state quadratic-bandit training loop.

    SPG and DPG learn a compatible-feature Q critic; CACLA keeps a single
    baseline parameter.  Returns the deterministic-policy reward measured
    every ``eval_every`` episodes (evaluations are analytic and consume no
    environment samples).
    """
    if rule not in ("spg", "dpg", "cacla"):
        raise ValueError(f"unsupported bandit rule {rule!r}")
    m = env.spec.action_dim
    policy = LinearPolicy(m)
    exploration = GaussianExploration(policy, config.sigma)
    state = env.reset(rng)
    sigma = config.sigma

    q_critic = CompatibleQCritic(policy) if rule in ("spg", "dpg") else None
    v_critic = ConstantVCritic() if rule == "cacla" else None

    lr = config.lr_actor
    curve = []
    for episode in range(episodes):
        action = exploration.act(state, rng)
        _, reward, _ = env.step(state, action, rng)

        if rule == "cacla":
            delta = reward - v_critic.v
            v_critic.v += config.lr_critic * delta
            if delta > 0:
                policy.theta += lr * (action - policy.theta)
        else:
            q_critic.sgd_fit_step(state, action, reward, config.lr_critic)
            if rule == "dpg":
                g = q_critic.grad_a(state)
            else:
                adv = q_critic.q(state, action) - q_critic.value(state)
                g = adv * (action - policy.act(state)) / sigma ** 2
            policy.theta += lr * g
            # the gated rule's step vanishes near the optimum on its own;
            # the critic-driven steps keep a noise floor, so only they get
            # the annealed rate
            lr = max(config.lr_actor_min, lr * config.lr_actor_decay)
        # projected step: an unbounded theta would blow up the compatible
        # features once the exploration mean leaves the action box
        policy.theta = np.clip(policy.theta, policy.low, policy.high)

        sigma = max(config.sigma_min, sigma * config.sigma_decay)
        exploration.sigma = sigma

        if (episode + 1) % eval_every == 0:
            a_det = policy.act(state)
            curve.append(-float(np.sum((a_det - env.target) ** 2)))
    return np.asarray(curve)
