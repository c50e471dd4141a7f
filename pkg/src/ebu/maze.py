"""Random-wall gridworld mazes with a BFS shortest-path oracle.

Cells are addressed as ``(x, y)`` with ``0 <= x < width`` and
``0 <= y < height``; ``walls[y, x]`` is True for a wall. The agent starts at
(0, 0) and the goal is the opposite corner.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import MazeGenerationError, UnreachableGoalError
from .mdp import TabularMDP

UP, DOWN, LEFT, RIGHT = 0, 1, 2, 3
MOVES = ((0, -1), (0, 1), (-1, 0), (1, 0))

GOAL_REWARD = 1000.0
BUMP_REWARD = -1.0
MAX_EPISODE_STEPS = 1000


@dataclass
class MazeSpec:
    walls: np.ndarray
    start: tuple[int, int] = (0, 0)
    goal: tuple[int, int] | None = None
    wall_density: float = 0.0
    attempts: int = 1

    def __post_init__(self):
        self.walls = np.asarray(self.walls, dtype=bool)
        if self.goal is None:
            self.goal = (self.width - 1, self.height - 1)
        self.start = tuple(int(v) for v in self.start)
        self.goal = tuple(int(v) for v in self.goal)
        for name, cell in (("start", self.start), ("goal", self.goal)):
            if not self.inside(cell):
                raise ValueError(f"{name} cell {cell} lies outside the grid")
            if self.is_wall(cell):
                raise ValueError(f"{name} cell {cell} is a wall")

    @property
    def width(self) -> int:
        return self.walls.shape[1]

    @property
    def height(self) -> int:
        return self.walls.shape[0]

    def inside(self, pos) -> bool:
        x, y = pos
        return 0 <= x < self.width and 0 <= y < self.height

    def is_wall(self, pos) -> bool:
        return bool(self.walls[pos[1], pos[0]])

    def state_index(self, pos) -> int:
        return pos[1] * self.width + pos[0]

    def position(self, index: int) -> tuple[int, int]:
        return index % self.width, index // self.width

    def to_text(self) -> str:
        """Plain-text grid: ``#`` wall, ``.`` free, ``S`` start, ``G`` goal."""
        rows = []
        for y in range(self.height):
            row = []
            for x in range(self.width):
                if (x, y) == self.start:
                    row.append("S")
                elif (x, y) == self.goal:
                    row.append("G")
                else:
                    row.append("#" if self.walls[y, x] else ".")
            rows.append("".join(row))
        return "\n".join(rows) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "MazeSpec":
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        if not lines or len({len(ln) for ln in lines}) != 1:
            raise ValueError("maze text must be a non-empty rectangle")
        walls = np.zeros((len(lines), len(lines[0])), dtype=bool)
        start = goal = None
        for y, line in enumerate(lines):
            for x, ch in enumerate(line):
                if ch == "#":
                    walls[y, x] = True
                elif ch == "S":
                    start = (x, y)
                elif ch == "G":
                    goal = (x, y)
                elif ch != ".":
                    raise ValueError(f"unexpected maze character {ch!r}")
        if start is None or goal is None:
            raise ValueError("maze text needs one S and one G")
        return cls(walls, start, goal)


def _bfs_distances(maze: MazeSpec) -> np.ndarray:
    dist = np.full(maze.walls.shape, -1, dtype=np.int64)
    sx, sy = maze.start
    dist[sy, sx] = 0
    queue = deque([maze.start])
    while queue:
        x, y = queue.popleft()
        for dx, dy in MOVES:
            nx, ny = x + dx, y + dy
            if 0 <= nx < maze.width and 0 <= ny < maze.height and not maze.walls[ny, nx] and dist[ny, nx] < 0:
                dist[ny, nx] = dist[y, x] + 1
                queue.append((nx, ny))
    return dist


def shortest_path_len(maze: MazeSpec) -> int:
    """Fewest 4-neighbour moves from start to goal."""
    gx, gy = maze.goal
    d = int(_bfs_distances(maze)[gy, gx])
    if d < 0:
        raise UnreachableGoalError("goal is not reachable from start")
    return d


def generate_maze(
    width: int = 10,
    height: int = 10,
    wall_density: float = 0.3,
    rng: np.random.Generator | None = None,
    max_attempts: int = 1000,
) -> MazeSpec:
    """Place each non-start, non-goal wall with probability ``wall_density``.

    Draws are repeated until the goal is reachable; the number of draws is
    recorded on the returned spec.
    """
    if not 0.0 <= wall_density < 1.0:
        raise ValueError("wall_density must lie in [0, 1)")
    rng = rng if rng is not None else np.random.default_rng()
    start, goal = (0, 0), (width - 1, height - 1)
    for attempt in range(1, max_attempts + 1):
        walls = rng.random((height, width)) < wall_density
        walls[start[1], start[0]] = False
        walls[goal[1], goal[0]] = False
        maze = MazeSpec(walls, start, goal, wall_density, attempt)
        gx, gy = goal
        if _bfs_distances(maze)[gy, gx] >= 0:
            return maze
    raise MazeGenerationError(
        f"no solvable {width}x{height} maze at density {wall_density} in {max_attempts} attempts"
    )


def maze_step(maze: MazeSpec, pos, action: int):
    """Returns ``(next_pos, reward, done)``; bumping into a wall or the border stays put."""
    dx, dy = MOVES[action]
    nxt = (pos[0] + dx, pos[1] + dy)
    if not maze.inside(nxt) or maze.is_wall(nxt):
        return tuple(pos), BUMP_REWARD, False
    if nxt == maze.goal:
        return nxt, GOAL_REWARD, True
    return nxt, 0.0, False


def maze_to_mdp(maze: MazeSpec, gamma: float = 0.9) -> TabularMDP:
    """Tabulate :func:`maze_step` over every cell; the goal becomes the terminal state.

    Wall cells are kept as unreachable zero-reward self-loops so state indices
    stay ``y * width + x``.
    """
    S = maze.width * maze.height
    successor = np.tile(np.arange(S)[:, None], (1, 4))
    reward = np.zeros((S, 4))
    terminal = np.zeros(S, dtype=bool)
    terminal[maze.state_index(maze.goal)] = True
    for s in range(S):
        pos = maze.position(s)
        if maze.is_wall(pos) or terminal[s]:
            continue
        for a in range(4):
            nxt, r, _ = maze_step(maze, pos, a)
            successor[s, a] = maze.state_index(nxt)
            reward[s, a] = r
    return TabularMDP(successor, reward, terminal, gamma, start=maze.state_index(maze.start), name="maze")
