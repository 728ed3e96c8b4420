import numpy as np
import pytest

from detac.critics import ConstantVCritic
from detac.policies import LinearPolicy, MlpPolicy
from detac.updates import (TrustRegionState, UpdateDirection, adapt_beta,
                           batch_gated_direction, cac_direction,
                           cacla_direction, dpg_direction,
                           penfac_actor_gradient, policy_distance_dhat,
                           ro_accept, spg_direction)


def test_update_direction_rejects_nonfinite():
    with pytest.raises(ValueError):
        UpdateDirection(np.array([1.0, np.inf]), "cacla")


def test_cacla_gate_closed_on_nonpositive_delta():
    pol = LinearPolicy(2)
    for delta in (0.0, -0.5, -100.0):
        g = cacla_direction(pol, None, np.array([0.3, 0.3]), delta).vector
        assert np.all(g == 0.0)


def test_cacla_moves_toward_action():
    pol = LinearPolicy(2, theta=np.array([0.1, -0.2]))
    a = np.array([0.5, 0.5])
    g = cacla_direction(pol, None, a, delta=1.0).vector
    # identity jacobian: direction is exactly a - mu
    assert np.allclose(g, a - pol.act(), atol=1e-15)


def test_cac_is_delta_times_cacla():
    rng = np.random.default_rng(0)
    pol = MlpPolicy(2, 2, hidden_sizes=(5,), rng=rng)
    s = rng.standard_normal(2)
    a = rng.uniform(-1, 1, 2)
    for delta in (0.3, 2.7):
        g_cacla = cacla_direction(pol, s, a, delta).vector
        g_cac = cac_direction(pol, s, a, delta).vector
        assert np.array_equal(g_cac, delta * g_cacla)


def test_spg_direction_formula():
    pol = LinearPolicy(1, theta=np.array([0.2]))
    a = np.array([0.5])
    g = spg_direction(pol, 0.5, None, a, advantage=2.0).vector
    assert g[0] == pytest.approx(2.0 * 0.3 / 0.25, abs=1e-12)


def test_spg_rejects_nonpositive_sigma():
    with pytest.raises(ValueError):
        spg_direction(LinearPolicy(1), 0.0, None, np.zeros(1), 1.0)


def test_dpg_direction_is_grad_a_through_jacobian():
    pol = LinearPolicy(3)
    grad_a = np.array([0.1, -0.7, 2.0])
    g = dpg_direction(pol, None, grad_a).vector
    assert np.array_equal(g, grad_a)


def test_dpg_matches_finite_difference_of_q_in_params():
    # with Q(s, a) fixed, d/dtheta Q(s, mu_theta(s)) via finite differences
    rng = np.random.default_rng(5)
    pol = MlpPolicy(2, 1, hidden_sizes=(4,), rng=rng)
    s = rng.standard_normal(2)
    w = np.array([1.3])  # Q(s, a) = w . a

    g = dpg_direction(pol, s, w).vector
    theta = pol.get_params()
    h = 1e-6
    fd = np.empty_like(theta)
    for j in range(theta.size):
        bumped = theta.copy()
        bumped[j] += h
        pol.set_params(bumped)
        up = float(w @ pol.act(s))
        bumped[j] -= 2 * h
        pol.set_params(bumped)
        down = float(w @ pol.act(s))
        fd[j] = (up - down) / (2 * h)
    pol.set_params(theta)
    assert np.max(np.abs(g - fd)) < 1e-5


def test_policy_distance_single_state():
    old = LinearPolicy(1, theta=np.array([0.0]))
    new = LinearPolicy(1, theta=np.array([0.3]))
    assert policy_distance_dhat(old, new, [None]) == pytest.approx(0.3)


def test_policy_distance_scales_with_sqrt_count():
    old = LinearPolicy(1, theta=np.array([0.0]))
    new = LinearPolicy(1, theta=np.array([0.2]))
    d1 = policy_distance_dhat(old, new, [None])
    d4 = policy_distance_dhat(old, new, [None] * 4)
    # sum of L identical norms over sqrt(L): grows as sqrt(L)
    assert d4 == pytest.approx(2.0 * d1)


def test_policy_distance_rejects_empty():
    with pytest.raises(ValueError):
        policy_distance_dhat(LinearPolicy(1), LinearPolicy(1), [])


def test_adapt_beta_dead_zone_and_doubling():
    trust = TrustRegionState(d_target=0.03, beta=1.0)
    assert adapt_beta(trust, 0.03) == 1.0          # inside the band
    assert adapt_beta(trust, 0.1) == 2.0           # too far: double
    assert adapt_beta(trust, 0.001) == 1.0         # too close: halve
    assert adapt_beta(trust, 0.001) == 0.5


def test_adapt_beta_clamps():
    trust = TrustRegionState(beta=1e6)
    assert adapt_beta(trust, 1.0) == 1e6
    trust = TrustRegionState(beta=1e-6)
    assert adapt_beta(trust, 0.0) == 1e-6


def test_penfac_gradient_matches_finite_difference_of_objective():
    # objective: mean_t [ H(A_t) A_t (a_t . mu) ... ] is awkward to state in
    # closed form, so check against FD of the surrogate
    #   L(theta) = mean_t [ w_t (-0.5 ||a_t - mu(s_t)||^2)
    #                       - beta ||mu(s_t) - mu_old(s_t)||^2 ]
    # whose gradient equals the penfac direction with w_t = max(A_t, 0)
    rng = np.random.default_rng(11)
    pol = MlpPolicy(2, 2, hidden_sizes=(5,), rng=rng)
    snap = pol.copy()
    snap.set_params(snap.get_params() + 0.05 * rng.standard_normal(pol.n_params))
    states = rng.standard_normal((6, 2))
    actions = rng.uniform(-1, 1, (6, 2))
    advs = rng.standard_normal(6)
    beta = 0.7

    g = penfac_actor_gradient(pol, snap, states, actions, advs, beta).vector

    def surrogate(theta):
        pol.set_params(theta)
        total = 0.0
        for s, a, adv in zip(states, actions, advs):
            mu = pol.act(s)
            w = max(adv, 0.0)
            total += -0.5 * w * np.sum((a - mu) ** 2)
            total -= beta * np.sum((mu - snap.act(s)) ** 2)
        return total / len(states)

    theta0 = pol.get_params()
    h = 1e-6
    fd = np.empty_like(theta0)
    for j in range(theta0.size):
        up = theta0.copy(); up[j] += h
        dn = theta0.copy(); dn[j] -= h
        fd[j] = (surrogate(up) - surrogate(dn)) / (2 * h)
    pol.set_params(theta0)
    assert np.max(np.abs(g - fd)) < 1e-5


def test_penfac_zero_beta_reduces_to_mean_cac():
    rng = np.random.default_rng(12)
    pol = MlpPolicy(2, 1, hidden_sizes=(4,), rng=rng)
    states = rng.standard_normal((5, 2))
    actions = rng.uniform(-1, 1, (5, 1))
    advs = rng.standard_normal(5)
    g = penfac_actor_gradient(pol, pol.copy(), states, actions, advs, 0.0).vector
    ref = np.zeros(pol.n_params)
    for s, a, adv in zip(states, actions, advs):
        ref += cac_direction(pol, s, a, adv).vector
    assert np.allclose(g, ref / 5, atol=1e-12)


def test_penfac_rejects_length_mismatch():
    pol = LinearPolicy(1)
    with pytest.raises(ValueError):
        penfac_actor_gradient(pol, pol.copy(), [None, None],
                              [np.zeros(1)], [1.0], 0.5)


def test_batch_gated_direction_matches_per_sample_loops():
    rng = np.random.default_rng(13)
    pol = MlpPolicy(2, 2, hidden_sizes=(6,), rng=rng)
    snap = pol.copy()
    snap.set_params(snap.get_params() + 0.02 * rng.standard_normal(pol.n_params))
    states = rng.standard_normal((7, 2))
    actions = rng.uniform(-1, 1, (7, 2))
    advs = rng.standard_normal(7)

    g_batch = batch_gated_direction(pol, states, actions, advs,
                                    scale_by_delta=True, snapshot=snap, beta=0.4)
    g_loop = penfac_actor_gradient(pol, snap, states, actions, advs, 0.4).vector
    assert np.max(np.abs(g_batch - g_loop)) < 1e-10

    g_batch = batch_gated_direction(pol, states, actions, advs,
                                    scale_by_delta=False)
    g_loop = np.zeros(pol.n_params)
    for s, a, adv in zip(states, actions, advs):
        g_loop += cacla_direction(pol, s, a, adv).vector
    assert np.max(np.abs(g_batch - g_loop / 7)) < 1e-10


def test_ro_accept_keeps_better_proposal():
    critic = ConstantVCritic(1.0)
    # bootstrapped value 2 + 0.9*1 = 2.9 > 1: accept
    out = ro_accept(critic, None, "old", "new", 2.0, None, 0.9)
    assert out == "new"
    # bootstrapped value 0 + 0.9 < 1: reject
    out = ro_accept(critic, None, "old", "new", 0.0, None, 0.9)
    assert out == "old"
    # ties reject (strict improvement required)
    out = ro_accept(critic, None, "old", "new", 0.1, None, 0.9)
    assert out == "old"
