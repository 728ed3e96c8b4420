"""Experiment runner (seed fan-out, training/evaluation scheduling, CSV
learning curves) and the randomized verification suites."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .agents import evaluate_deterministic, make_agent
from .envs import PointMass, make_quadratic_bandit
from .nets import MlpNet, gradient_check
from .oracle import (LipschitzGaussianChain, epsilon_smoothed,
                     gated_direction_ratio, occupancy_shift_bound_check,
                     performance_difference_residual)
from .envs import random_finite_mdp

CSV_HEADER = "seed,env_steps,mean_return,returns..."


def _fmt(x):
    return repr(float(x))


def make_env(config):
    if config.env == "bandit":
        return make_quadratic_bandit(config.env_params["m"],
                                     config.env_params["seed"])
    return PointMass(goal=config.env_params["goal"],
                     horizon=config.env_params["horizon"],
                     gamma=config.agent.gamma)


def run_seed(config, seed):
    """Train one seed and return the evaluation rows.

    Evaluation episodes use a dedicated rng stream and never count toward
    (or feed) training.
    """
    rng = np.random.default_rng(seed)
    eval_rng_seq = np.random.SeedSequence([seed, 0xE7A1])
    env = make_env(config)
    if config.agent.rule in ("spg", "dpg"):
        raise ValueError("spg/dpg are bandit baselines; use the bandit-suite "
                         "command instead of train")
    agent = make_agent(config.agent, env, np.random.default_rng([seed, 0x5EED]))

    rows = []

    def evaluate(steps):
        mean, returns = evaluate_deterministic(
            agent.policy, env, config.eval_episodes,
            np.random.default_rng(eval_rng_seq.spawn(1)[0]))
        rows.append((seed, steps, mean, returns))

    steps = 0
    evaluate(steps)
    next_eval = config.eval_interval
    while steps < config.total_steps:
        traj = agent.run_episode(env, rng)
        steps += len(traj)
        if steps >= next_eval:
            evaluate(steps)
            while next_eval <= steps:
                next_eval += config.eval_interval
    return rows


def write_seed_csv(path, rows):
    lines = [CSV_HEADER]
    for seed, steps, mean, returns in rows:
        cells = [str(seed), str(steps), _fmt(mean)] + [_fmt(r) for r in returns]
        lines.append(",".join(cells))
    with open(path, "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def write_aggregate_csv(path, per_seed_rows):
    """Aggregate over seeds at matching evaluation indices: mean, std and
    std / sqrt(n_seeds) of the per-seed mean returns."""
    n_rows = min(len(rows) for rows in per_seed_rows)
    lines = ["env_steps,mean,std,stderr"]
    n_seeds = len(per_seed_rows)
    for i in range(n_rows):
        steps = per_seed_rows[0][i][1]
        means = np.array([rows[i][2] for rows in per_seed_rows])
        lines.append(",".join([
            str(steps), _fmt(means.mean()), _fmt(means.std()),
            _fmt(means.std() / np.sqrt(n_seeds))]))
    with open(path, "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def _worker_count(n_tasks):
    cap = os.environ.get("DETAC_THREADS")
    cap = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(cap, n_tasks))


def run_experiment(config):
    """Train every seed, write one CSV per seed plus an aggregate CSV.
    Returns the list of written file paths."""
    os.makedirs(config.out, exist_ok=True)
    seeds = [config.seed_offset + i for i in range(config.seeds)]
    workers = _worker_count(len(seeds))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            all_rows = list(pool.map(run_seed, [config] * len(seeds), seeds))
    else:
        all_rows = [run_seed(config, s) for s in seeds]

    paths = []
    for seed, rows in zip(seeds, all_rows):
        path = os.path.join(config.out, f"seed_{seed}.csv")
        write_seed_csv(path, rows)
        paths.append(path)
    agg = os.path.join(config.out, "aggregate.csv")
    write_aggregate_csv(agg, all_rows)
    paths.append(agg)
    return paths


# ---------------------------------------------------------------------------
# verification suites
# ---------------------------------------------------------------------------

def suite_lemma2(seed=0, trials=100):
    rng = np.random.default_rng(seed)
    lines = []
    worst = 0.0
    for i in range(trials):
        mdp = random_finite_mdp(4, 3, 0.9, rng)
        mu = rng.integers(0, 3, size=4)
        mu_tilde = rng.integers(0, 3, size=4)
        pi = epsilon_smoothed(mdp, mu, rng.uniform(0.05, 0.5))
        res = performance_difference_residual(mdp, mu, mu_tilde, pi)
        worst = max(worst, res)
        lines.append(f"trial={i} mu={mu.tolist()} mu_tilde={mu_tilde.tolist()} "
                     f"residual={res:.3e} pass={res < 1e-9}")
    passed = worst < 1e-9
    lines.append(f"max_residual={worst:.3e} pass={passed}")
    return passed, lines


def suite_lemma1(seed=0):
    lines = []
    ok = True
    results = gated_direction_ratio(target=1.0, theta=0.0,
                                    sigmas=(0.5, 0.2, 0.1, 0.05))
    for r in results:
        in_range = 0.0 <= r["ratio"] <= 1.0
        ok = ok and in_range
        lines.append(f"sigma={r['sigma']} gated={r['gated']:.6f} "
                     f"deterministic={r['deterministic']:.6f} "
                     f"ratio={r['ratio']:.6f} pass={in_range}")
    zero = gated_direction_ratio(target=1.0, theta=1.0, sigmas=(0.01,))[0]
    zero_ok = zero["zero_ok"]
    ok = ok and zero_ok
    lines.append(f"theta=target sigma=0.01 gated={zero['gated']:.3e} "
                 f"pass={zero_ok}")
    lines.append(f"pass={ok}")
    return ok, lines


def suite_theorem1(seed=0, trials=50):
    rng = np.random.default_rng(seed)
    chain = LipschitzGaussianChain()
    lines = []
    n_ok = 0
    for i in range(trials):
        rewards = rng.uniform(-1.0, 1.0, size=(chain.n_states, chain.n_actions))
        mdp = chain.build_mdp(rewards)
        mu = rng.integers(0, chain.n_actions, size=chain.n_states)
        shiftmax = 3
        mu_tilde = np.clip(mu + rng.integers(-shiftmax, shiftmax + 1,
                                             size=chain.n_states),
                           0, chain.n_actions - 1)
        sigma = rng.uniform(0.05, 0.25)
        lhs, rhs, sat = occupancy_shift_bound_check(chain, mdp, mu, mu_tilde,
                                                    sigma)
        n_ok += int(sat)
        lines.append(f"trial={i} sigma={sigma:.4f} lhs={lhs:.6e} "
                     f"rhs={rhs:.6e} pass={sat}")
    passed = n_ok == trials
    lines.append(f"satisfied={n_ok}/{trials} pass={passed}")
    return passed, lines


def agent_architectures():
    """Every network shape/activation combination the agents build."""
    archs = []
    for hidden_act in ("tanh", "leaky_relu"):
        for bn in (False, True):
            archs.append(dict(sizes=[2, 32, 32, 1], hidden=hidden_act,
                              output="tanh", batch_norm=bn))
        archs.append(dict(sizes=[2, 32, 32, 1], hidden=hidden_act,
                          output="linear", batch_norm=False))
    archs.append(dict(sizes=[1, 16, 2], hidden="tanh", output="tanh",
                      batch_norm=False))
    return archs


def suite_gradcheck(seed=0, n_seeds=20, tol=1e-4):
    lines = []
    worst = 0.0
    for arch in agent_architectures():
        for s in range(n_seeds):
            rng = np.random.default_rng(seed + s)
            net = MlpNet(arch["sizes"], hidden=arch["hidden"],
                         output=arch["output"], batch_norm=arch["batch_norm"],
                         rng=rng)
            x = rng.standard_normal((4, arch["sizes"][0]))
            err = gradient_check(net, x, training=arch["batch_norm"])
            worst = max(worst, err)
            lines.append(f"arch={arch['sizes']} hidden={arch['hidden']} "
                         f"output={arch['output']} bn={arch['batch_norm']} "
                         f"seed={s} max_rel_err={err:.3e} pass={err < tol}")
    passed = worst < tol
    lines.append(f"max_rel_err={worst:.3e} pass={passed}")
    return passed, lines


SUITES = {
    "lemma1": suite_lemma1,
    "lemma2": suite_lemma2,
    "theorem1": suite_theorem1,
    "gradcheck": suite_gradcheck,
}


def run_verification(name, seed=0, out=None):
    """Run one named suite (or 'all'); returns (exit_code, report lines)."""
    if name == "all":
        names = list(SUITES)
    elif name in SUITES:
        names = [name]
    else:
        raise KeyError(name)
    all_lines = []
    ok = True
    for n in names:
        passed, lines = SUITES[n](seed=seed)
        all_lines.append(f"== suite {n} ==")
        all_lines.extend(lines)
        ok = ok and passed
    if out:
        with open(out, "w", newline="\n") as f:
            f.write("\n".join(all_lines) + "\n")
    return (0 if ok else 1), all_lines
