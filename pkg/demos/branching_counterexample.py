"""Why cutting traces on exploratory actions stalls Q(lambda): the reward at the
end of the branching chain never reaches the first state, while one backward
sweep carries it all the way."""
import numpy as np

from ebu import branching_episode, make_branching, tabular_ebu_update, watkins_q_lambda_update
from ebu.environments import CONTINUE, EXIT


def show(name, q, n):
    for i in range(n):
        print(f"  {name} s{i + 1}: exit={q[i, EXIT]:.2f} continue={q[i, CONTINUE]:.2f}")


def main():
    n = 2
    mdp = make_branching(n)
    # the distractor exit at s1 happens to be learned first
    q0 = tabular_ebu_update(mdp.zeros(), branching_episode(n, exit_at=0), mdp.gamma)
    show("start", q0, n)
    good = branching_episode(n)
    print("replaying the rewarded episode once:")
    show("backward sweep", tabular_ebu_update(q0, good, mdp.gamma), n)
    show("Watkins Q(lambda=1)", watkins_q_lambda_update(q0, good, 1.0, mdp.gamma), n)


if __name__ == "__main__":
    main()
