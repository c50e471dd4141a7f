"""One random maze, a short budget: backward episodes against one-step
replay, reported as path length relative to the shortest path."""
import argparse
import dataclasses

import numpy as np

from ebu import generate_maze, maze_to_mdp, shortest_path_len
from ebu.harness.suites import bench_train_config
from ebu.training import Environment, train


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--density", type=float, default=0.3)
    parser.add_argument("--maze-seed", type=int, default=1)
    parser.add_argument("--steps", type=int, default=30_000)
    parser.add_argument("--seeds", type=int, default=2)
    args = parser.parse_args()

    maze = generate_maze(10, 10, args.density, np.random.default_rng(args.maze_seed))
    print(maze.to_text())
    print("shortest path:", shortest_path_len(maze))
    env = Environment(maze_to_mdp(maze, 0.9), "index", maze)
    cfg = bench_train_config(total_steps=args.steps, eval_period=args.steps // 3)
    for learner in ("ebu", "one-step", "n-step"):
        for seed in range(args.seeds):
            rows = train(dataclasses.replace(cfg, learner=learner, seed=seed), env=env).rows
            trace = "  ".join(f"{r.step}:{r.rel_length:.2f}" for r in rows)
            print(f"{learner:9s} seed {seed}  relative length by step  {trace}")


if __name__ == "__main__":
    main()
