"""Walk through the four-state chain: backward targets, the tabular sweep, and
how often uniform replay has found the optimal policy after k updates."""
import argparse

import numpy as np

from ebu import ebu_targets, fig1_episode, make_chain, tabular_ebu_update
from ebu.harness.fig1 import fig1_probability_curve


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--gamma", type=float, default=0.9)
    parser.add_argument("--trials", type=int, default=10_000)
    args = parser.parse_args()

    mdp = make_chain(args.gamma)
    ep = fig1_episode()
    print("stored episode:", " -> ".join(f"s{s + 1}" for s in [*ep.states, ep.next_states[-1]]))

    zero = mdp.zeros()
    for beta in (0.0, 0.5, 1.0):
        y = ebu_targets(ep, zero, beta, args.gamma).y
        print(f"beta={beta:<4} targets {np.round(y, 6)}")

    q = tabular_ebu_update(zero, ep, args.gamma)
    print("Q after one backward sweep (rows s1..s4, columns left/right):")
    print(np.round(q, 4))
    print("greedy actions:", ["left" if row.argmax() == 0 else "right" for row in q[:3]])

    curve = fig1_probability_curve(40, args.trials, np.random.default_rng(0), args.gamma)
    print("\nupdates  P(optimal) uniform  P(optimal) backward")
    for k, u, e in curve.rows():
        if k in (0, 2, 3, 5, 10, 20, 30, 40):
            print(f"{k:7d}  {u:18.4f}  {e:19.4f}")


if __name__ == "__main__":
    main()
