import heapq

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ebu.errors import MazeGenerationError, UnreachableGoalError
from ebu.maze import (
    BUMP_REWARD,
    DOWN,
    GOAL_REWARD,
    MOVES,
    RIGHT,
    MazeSpec,
    generate_maze,
    maze_step,
    maze_to_mdp,
    shortest_path_len,
)
from ebu.mdp import greedy_path, value_iteration


def dijkstra(maze):
    """Independent oracle: unit-weight Dijkstra with a heap."""
    dist = {maze.start: 0}
    heap = [(0, maze.start)]
    while heap:
        d, (x, y) = heapq.heappop(heap)
        if (x, y) == maze.goal:
            return d
        if d > dist[(x, y)]:
            continue
        for dx, dy in MOVES:
            n = (x + dx, y + dy)
            if maze.inside(n) and not maze.is_wall(n) and d + 1 < dist.get(n, 1 << 30):
                dist[n] = d + 1
                heapq.heappush(heap, (d + 1, n))
    return None


def test_empty_maze():
    maze = generate_maze(10, 10, 0.0, np.random.default_rng(0))
    assert not maze.walls.any()
    assert shortest_path_len(maze) == 18


def test_dense_maze_fails():
    with pytest.raises(MazeGenerationError):
        generate_maze(10, 10, 0.99, np.random.default_rng(0), max_attempts=1000)


def test_half_density_mazes_reachable():
    rng = np.random.default_rng(1)
    for _ in range(50):
        maze = generate_maze(10, 10, 0.5, rng)
        assert shortest_path_len(maze) == dijkstra(maze)


def test_center_wall():
    maze = MazeSpec.from_text("S..\n.#.\n..G")
    assert shortest_path_len(maze) == 4


def test_walled_row_unreachable():
    maze = MazeSpec.from_text("S..\n###\n..G")
    with pytest.raises(UnreachableGoalError):
        shortest_path_len(maze)


def test_steps():
    maze = MazeSpec.from_text("S#.\n...\n..G")
    assert maze_step(maze, (0, 0), RIGHT) == ((0, 0), BUMP_REWARD, False)
    assert maze_step(maze, (0, 0), 0) == ((0, 0), BUMP_REWARD, False)
    assert maze_step(maze, (0, 0), DOWN) == ((0, 1), 0.0, False)
    assert maze_step(maze, (2, 1), DOWN) == ((2, 2), GOAL_REWARD, True)


def test_text_roundtrip():
    maze = generate_maze(7, 5, 0.3, np.random.default_rng(4))
    back = MazeSpec.from_text(maze.to_text())
    assert np.array_equal(back.walls, maze.walls)
    assert back.start == maze.start and back.goal == maze.goal


def test_mdp_greedy_path_is_shortest():
    maze = generate_maze(10, 10, 0.3, np.random.default_rng(5))
    mdp = maze_to_mdp(maze, 0.9)
    path = greedy_path(mdp, value_iteration(mdp))
    assert len(path) - 1 == shortest_path_len(maze)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 0.5), st.integers(2, 9), st.integers(2, 9))
def test_bfs_matches_dijkstra_and_steps_avoid_walls(seed, density, w, h):
    rng = np.random.default_rng(seed)
    maze = generate_maze(w, h, density, rng)
    assert shortest_path_len(maze) == dijkstra(maze)
    for y in range(h):
        for x in range(w):
            if maze.is_wall((x, y)):
                continue
            for a in range(4):
                nxt, _, _ = maze_step(maze, (x, y), a)
                assert maze.inside(nxt) and not maze.is_wall(nxt)
