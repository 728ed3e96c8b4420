"""Exact dynamic programming over tabular MDPs, adaptive quadrature over
1-D action spaces, and the numerical verification checks built on them:

* value/advantage/occupancy solutions by direct linear solves,
* the performance-difference identity relating two deterministic policies
  through a stochastic smoothing of the first,
* the gated TD-scaled direction versus the deterministic gradient on the
  quadratic bandit (their per-coordinate ratio lies in [0, 1]),
* the occupancy-shift bound for Lipschitz transition kernels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .envs import FiniteMdp


# ---------------------------------------------------------------------------
# dynamic programming
# ---------------------------------------------------------------------------

@dataclass
class DpSolution:
    v: np.ndarray          # state values
    q: np.ndarray          # action values
    advantage: np.ndarray  # q - v
    occupancy: np.ndarray  # discounted state distribution, sums to 1/(1-gamma)
    j: float               # T0-weighted performance
    policy: np.ndarray     # (n_states, n_actions) stochastic matrix


def policy_matrix(mdp, policy):
    """Accept a deterministic action index per state or a full stochastic
    matrix; return the (n, k) stochastic matrix."""
    policy = np.asarray(policy)
    if policy.ndim == 1:
        mat = np.zeros((mdp.n_states, mdp.n_actions))
        mat[np.arange(mdp.n_states), policy.astype(int)] = 1.0
        return mat
    if policy.shape != (mdp.n_states, mdp.n_actions):
        raise ValueError("policy matrix has wrong shape")
    return policy.astype(float)


def dp_solve(mdp, policy):
    """Exact solution of the evaluation equations for a fixed policy."""
    pi = policy_matrix(mdp, policy)
    n = mdp.n_states
    p_pi = np.einsum("sa,san->sn", pi, mdp.transitions)
    r_pi = np.einsum("sa,sa->s", pi, mdp.rewards)
    eye = np.eye(n)
    v = np.linalg.solve(eye - mdp.gamma * p_pi, r_pi)
    q = mdp.rewards + mdp.gamma * mdp.transitions @ v
    adv = q - v[:, None]
    occupancy = np.linalg.solve(eye - mdp.gamma * p_pi.T, mdp.start)
    j = float(mdp.start @ v)
    return DpSolution(v=v, q=q, advantage=adv, occupancy=occupancy,
                      j=j, policy=pi)


def performance_j(mdp, policy):
    return dp_solve(mdp, policy).j


def performance_difference_residual(mdp, mu, mu_tilde, pi):
    """Residual of the two-term performance-difference identity.

    J(mu~) should equal J(mu) plus the occupancy-weighted advantage of the
    smoothed policy pi against mu, plus the mu~-occupancy-weighted advantage
    of mu~ against pi.  Occupancies are the unnormalized discounted
    distributions.
    """
    sol_mu = dp_solve(mdp, mu)
    sol_pi = dp_solve(mdp, pi)
    sol_tilde = dp_solve(mdp, mu_tilde)
    pi_mat = policy_matrix(mdp, pi)

    term_pi = float(np.sum(sol_pi.occupancy[:, None] * pi_mat * sol_mu.advantage))
    mu_tilde = np.asarray(mu_tilde).astype(int)
    term_tilde = float(sol_tilde.occupancy
                       @ sol_pi.advantage[np.arange(mdp.n_states), mu_tilde])
    return abs(sol_tilde.j - (sol_mu.j + term_pi + term_tilde))


def epsilon_smoothed(mdp, mu, epsilon):
    """Stochastic smoothing of a deterministic tabular policy."""
    mat = policy_matrix(mdp, mu) * (1 - epsilon)
    mat += epsilon / mdp.n_actions
    return mat


# ---------------------------------------------------------------------------
# adaptive Simpson quadrature
# ---------------------------------------------------------------------------

def adaptive_simpson(f, a, b, tol=1e-8, max_depth=40):
    """Classic recursive Simpson rule with interval halving."""

    def simpson(lo, hi, f_lo, f_mid, f_hi):
        return (hi - lo) / 6.0 * (f_lo + 4.0 * f_mid + f_hi)

    def recurse(lo, hi, f_lo, f_mid, f_hi, whole, eps, depth):
        mid = 0.5 * (lo + hi)
        f_l = f(0.5 * (lo + mid))
        f_r = f(0.5 * (mid + hi))
        left = simpson(lo, mid, f_lo, f_l, f_mid)
        right = simpson(mid, hi, f_mid, f_r, f_hi)
        if depth <= 0 or abs(left + right - whole) <= 15.0 * eps:
            return left + right + (left + right - whole) / 15.0
        return (recurse(lo, mid, f_lo, f_l, f_mid, left, eps / 2, depth - 1)
                + recurse(mid, hi, f_mid, f_r, f_hi, right, eps / 2, depth - 1))

    f_a, f_m, f_b = f(a), f(0.5 * (a + b)), f(b)
    whole = simpson(a, b, f_a, f_m, f_b)
    return recurse(a, b, f_a, f_m, f_b, whole, tol, max_depth)


# ---------------------------------------------------------------------------
# gated direction vs deterministic gradient on the 1-D quadratic bandit
# ---------------------------------------------------------------------------

def bandit_exact_advantage(target, theta, sigma, m=1):
    """A(a) = R(a) - E_pi[R] for the quadratic bandit under Gaussian
    exploration around theta; closed form thanks to Gaussian moments."""
    def advantage(a):
        a = np.atleast_1d(np.asarray(a, float))
        t = np.atleast_1d(np.asarray(target, float))
        th = np.atleast_1d(np.asarray(theta, float))
        return (-np.sum((a - t) ** 2) + np.sum((th - t) ** 2)
                + a.size * sigma ** 2)
    return advantage


def gated_scaled_direction_1d(target, theta, sigma, tol=1e-8):
    """Quadrature value of the gated, TD-scaled inner integral (ascent
    convention, including the 1/sigma^2 likelihood-ratio factor):

        (1/sigma^2) int N(a; theta, sigma^2) A(a) H(A(a)) (a - theta) da
    """
    adv = bandit_exact_advantage(target, theta, sigma)

    def integrand(a):
        val = adv(a)
        if val <= 0:
            return 0.0
        density = np.exp(-0.5 * ((a - theta) / sigma) ** 2) / (
            sigma * np.sqrt(2 * np.pi))
        return density * val * (a - theta) / sigma ** 2

    return adaptive_simpson(integrand, theta - 8 * sigma, theta + 8 * sigma, tol)


def spg_inner_integral_1d(target, theta, sigma, tol=1e-8):
    """Quadrature of the ungated likelihood-ratio inner integral."""
    adv = bandit_exact_advantage(target, theta, sigma)

    def integrand(a):
        density = np.exp(-0.5 * ((a - theta) / sigma) ** 2) / (
            sigma * np.sqrt(2 * np.pi))
        return density * adv(a) * (a - theta) / sigma ** 2

    return adaptive_simpson(integrand, theta - 8 * sigma, theta + 8 * sigma, tol)


def deterministic_gradient_1d(target, theta):
    """Exact action gradient of the quadratic reward at a = theta."""
    return 2.0 * (float(target) - float(theta))


def gated_direction_ratio(target, theta, sigmas, tol=1e-8, zero_tol=1e-6):
    """Per-sigma ratio of the gated TD-scaled direction to the
    deterministic gradient.

    Returns a list of dicts with keys sigma, gated, deterministic, ratio.
    When the deterministic gradient vanishes (theta == target) the ratio is
    None and the gated direction is reported against ``zero_tol``.
    """
    dpg = deterministic_gradient_1d(target, theta)
    out = []
    for sigma in sigmas:
        gated = gated_scaled_direction_1d(target, theta, sigma, tol)
        if dpg == 0.0:
            out.append({"sigma": sigma, "gated": gated, "deterministic": 0.0,
                        "ratio": None, "zero_ok": abs(gated) < zero_tol})
        else:
            out.append({"sigma": sigma, "gated": gated, "deterministic": dpg,
                        "ratio": gated / dpg})
    return out


def check_lemma2_identity(mdp, mu, mu_tilde, pi):
    """Residual of the performance-difference identity (should be ~0)."""
    return performance_difference_residual(mdp, mu, mu_tilde, pi)


def estimate_gplus(bandit, theta, sigmas, tol=1e-8, zero_tol=1e-6):
    """Per-sigma ratio of the gated TD-scaled direction to the deterministic
    gradient on a 1-D quadratic bandit."""
    target = np.asarray(bandit.target, float).reshape(-1)
    if target.size != 1:
        raise ValueError("estimate_gplus needs a 1-D bandit")
    return gated_direction_ratio(float(target[0]), theta, sigmas, tol, zero_tol)


# ---------------------------------------------------------------------------
# occupancy-shift bound on a Gaussian chain
# ---------------------------------------------------------------------------

class LipschitzGaussianChain:
    """1-D state grid with kernel s' ~ Normal(s + gain * a, tau^2), binned
    onto the grid with tail mass absorbed by the edge cells (rows sum to 1
    exactly).

    Binning a distribution cannot increase total-variation distance, so the
    L1 Lipschitz constant of the continuous kernel carries over:
    sum_{s'} |T(s'|s,a1) - T(s'|s,a2)| <= L |a1 - a2| with
    L = 2 gain / (tau sqrt(2 pi)), which also bounds every single entry.
    """

    def __init__(self, n_states=41, state_low=-1.0, state_high=1.0,
                 n_actions=21, action_low=-1.0, action_high=1.0,
                 gain=0.3, tau=0.4, gamma=0.9):
        self.grid = np.linspace(state_low, state_high, n_states)
        self.actions = np.linspace(action_low, action_high, n_actions)
        self.gain = float(gain)
        self.tau = float(tau)
        self.gamma = float(gamma)
        width = self.grid[1] - self.grid[0]
        self.edges = np.concatenate(
            [[-np.inf], self.grid[:-1] + width / 2, [np.inf]])

    @property
    def n_states(self):
        return self.grid.size

    @property
    def n_actions(self):
        return self.actions.size

    def lipschitz_constant(self):
        return 2.0 * self.gain / (self.tau * np.sqrt(2.0 * np.pi))

    def transition_row(self, state_idx, action):
        """Distribution over next grid states for a (possibly off-grid)
        continuous action."""
        mean = self.grid[state_idx] + self.gain * float(action)
        z = (self.edges - mean) / (self.tau * np.sqrt(2.0))
        cdf = 0.5 * (1.0 + erf(z))
        return np.diff(cdf)

    def build_mdp(self, rewards, start=None):
        """Tabular MDP over (state grid x action grid)."""
        n, k = self.n_states, self.n_actions
        p = np.empty((n, k, n))
        for s in range(n):
            for a in range(k):
                p[s, a] = self.transition_row(s, self.actions[a])
                p[s, a] /= p[s, a].sum()
        if start is None:
            start = np.full(n, 1.0 / n)
        return FiniteMdp(p, rewards, start, self.gamma)

    def smoothed_policy(self, mu_actions, sigma):
        """Discretized Gaussian policy over the action grid, centered at the
        deterministic action per state."""
        mu_actions = np.asarray(mu_actions, float)
        logits = -0.5 * ((self.actions[None, :] - mu_actions[:, None]) / sigma) ** 2
        weights = np.exp(logits)
        return weights / weights.sum(axis=1, keepdims=True)


def occupancy_shift_bound_check(chain, mdp, mu_idx, mu_tilde_idx, sigma):
    """Check that the occupancy-shift error of the smoothed-policy
    approximation stays below the Lipschitz bound.

    lhs: |sum_s d^{mu~}(s) A^pi(s, mu~(s)) - sum_s d^pi(s) A^pi(s, mu~(s))|
    rhs: eps L / (1 - gamma) * (max_s |mu~(s) - mu(s)| + 2 m sigma / sqrt(2 pi))

    Occupancies are the unnormalized discounted distributions and
    eps = max |A^pi|.  Requires the shift term to be < 1 (the regime in
    which the one-step bound dominates).
    """
    mu_idx = np.asarray(mu_idx, dtype=int)
    mu_tilde_idx = np.asarray(mu_tilde_idx, dtype=int)
    mu_a = chain.actions[mu_idx]
    mu_tilde_a = chain.actions[mu_tilde_idx]
    m = 1
    shift = float(np.max(np.abs(mu_tilde_a - mu_a))) + \
        2.0 * m * sigma / np.sqrt(2.0 * np.pi)
    if shift >= 1.0:
        raise ValueError("policies/exploration too far apart for the bound "
                         f"(shift term {shift:.3f} >= 1)")

    pi = chain.smoothed_policy(mu_a, sigma)
    sol_pi = dp_solve(mdp, pi)
    sol_tilde = dp_solve(mdp, mu_tilde_idx)
    a_at_tilde = sol_pi.advantage[np.arange(mdp.n_states), mu_tilde_idx]
    lhs = abs(float((sol_tilde.occupancy - sol_pi.occupancy) @ a_at_tilde))

    eps = float(np.max(np.abs(sol_pi.advantage)))
    rhs = eps * chain.lipschitz_constant() / (1.0 - mdp.gamma) * shift
    return lhs, rhs, lhs <= rhs


def theorem1_bound_check(chain, mdp, mu, mu_tilde, sigma):
    """(lhs, rhs, satisfied) for the occupancy-shift bound."""
    return occupancy_shift_bound_check(chain, mdp, mu, mu_tilde, sigma)
