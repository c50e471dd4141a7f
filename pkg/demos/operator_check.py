"""Apply the episodic backward operator to a random deterministic MDP: measure
the contraction ratio and iterate to its fixed point under two schedules."""
import argparse

import numpy as np

from ebu import OperatorConfig, contraction_ratio, fixed_point, random_deterministic_mdp, random_schedules, value_iteration


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--beta", type=float, default=0.5)
    parser.add_argument("--gamma", type=float, default=0.9)
    parser.add_argument("--max-len", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    mdp = random_deterministic_mdp(rng, 5, 3, gamma=args.gamma)
    cfg = OperatorConfig(args.beta, args.gamma, 1e-9)
    sched = random_schedules(mdp, args.max_len, rng)
    n_paths = sum(len(p) for p in sched.paths.values())
    print(f"{mdp.num_states} states, {mdp.num_actions} actions, {n_paths} enumerated paths")

    ratios = []
    for _ in range(20):
        q1 = rng.normal(size=(mdp.num_states, mdp.num_actions))
        ratios.append(contraction_ratio(mdp, q1, q1 + rng.normal(size=q1.shape), sched, cfg))
    print(f"contraction ratio over 20 pairs: max {max(ratios):.4f} (gamma = {args.gamma})")

    q_star = value_iteration(mdp, 1e-12)
    for i in range(2):
        q = fixed_point(mdp, random_schedules(mdp, args.max_len, rng), cfg, tol=1e-8)
        print(f"schedule {i}: max |fixed point - Q*| = {np.abs(q - q_star).max():.2e}")


if __name__ == "__main__":
    main()
