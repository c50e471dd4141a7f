"""Episodic replay memory.

Transitions are grouped into episodes as they arrive. An episode is *closed*
when a terminal transition is stored or when :meth:`ReplayMemory.end_episode`
is called (time limit); closed episodes are what :meth:`sample_episode` draws
from. Eviction always removes whole episodes, oldest first.

Storage is a set of flat column arrays addressed by an ever-increasing
logical index; every transition also remembers the serial number of its
episode, so uniform transition sampling is O(batch).
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import EmptyMemoryError, EpisodeError
from .mdp import Episode, Transition

_RECORD = struct.Struct("<qqdqB")


class _EpisodeRecord:
    __slots__ = ("start", "length", "complete", "cached", "returns")

    def __init__(self, start: int):
        self.start = start  # logical index of the first transition
        self.length = 0
        self.complete = False
        self.cached: Episode | None = None
        self.returns: tuple[float, np.ndarray] | None = None  # (gamma, discounted reward-to-go)

    @property
    def end(self) -> int:
        return self.start + self.length


class ReplayMemory:
    """Bounded store of transitions with episode bookkeeping.

    ``length_weighted=True`` makes :meth:`sample_episode` pick episodes with
    probability proportional to their length instead of uniformly.
    """

    def __init__(self, capacity: int, length_weighted: bool = False):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.length_weighted = length_weighted
        n = 2 * capacity + 1
        self._s = np.empty(n, dtype=np.int64)
        self._a = np.empty(n, dtype=np.int64)
        self._r = np.empty(n, dtype=np.float64)
        self._s2 = np.empty(n, dtype=np.int64)
        self._term = np.empty(n, dtype=bool)
        self._mu = np.empty(n, dtype=np.float64)
        self._serial = np.empty(n, dtype=np.int64)
        self._offset = 0  # logical index stored at physical slot 0
        self._head = 0  # logical index of the oldest transition
        self._tail = 0  # one past the newest
        self._recs: dict[int, _EpisodeRecord] = {}
        self._first = 0  # serial of the oldest stored episode
        self._next = 0  # serial the next episode will get
        self._complete_count = 0

    def __len__(self):
        return self._tail - self._head

    @property
    def _open(self) -> _EpisodeRecord | None:
        rec = self._recs.get(self._next - 1)
        if rec is not None and not rec.complete:
            return rec
        return None

    @property
    def num_complete(self) -> int:
        return self._complete_count

    def _ordered(self) -> list[_EpisodeRecord]:
        return [self._recs[k] for k in range(self._first, self._next)]

    @property
    def episode_index(self) -> list[tuple[int, int, bool]]:
        """``(start, length, complete)`` per stored episode, oldest first."""
        return [(rec.start - self._head, rec.length, rec.complete) for rec in self._ordered()]

    def store(self, t: Transition):
        if not np.isfinite(t.r):
            raise EpisodeError("reward must be finite")
        rec = self._open
        if rec is None:
            rec = _EpisodeRecord(self._tail)
            self._recs[self._next] = rec
            self._next += 1
        elif self._s2[self._tail - 1 - self._offset] != t.s:
            last = self._s2[self._tail - 1 - self._offset]
            raise EpisodeError(f"transition from state {t.s} does not continue the open episode (last s_next={last})")
        if self._tail - self._offset == len(self._s):
            self._compact()
        i = self._tail - self._offset
        self._s[i], self._a[i], self._r[i], self._s2[i] = t.s, t.a, t.r, t.s_next
        self._term[i], self._mu[i], self._serial[i] = t.terminal, t.mu, self._next - 1
        self._tail += 1
        rec.length += 1
        if t.terminal:
            self._seal(rec)
        self._evict()

    def _compact(self):
        lo, hi = self._head - self._offset, self._tail - self._offset
        for col in (self._s, self._a, self._r, self._s2, self._term, self._mu, self._serial):
            col[: hi - lo] = col[lo:hi]
        self._offset = self._head

    def end_episode(self):
        """Close the open episode without a terminal transition (e.g. on a time limit)."""
        rec = self._open
        if rec is not None:
            self._seal(rec)

    def _seal(self, rec):
        rec.complete = True
        self._complete_count += 1

    def _evict(self):
        while len(self) > self.capacity and self._next - self._first > 1:
            rec = self._recs.pop(self._first)
            self._first += 1
            self._head += rec.length
            if rec.complete:
                self._complete_count -= 1
        if len(self) > self.capacity:
            # a single episode longer than the whole memory: drop its head
            rec = self._recs[self._first]
            drop = len(self) - self.capacity
            rec.start += drop
            rec.length -= drop
            rec.cached = None
            rec.returns = None
            self._head += drop

    def _build(self, rec: _EpisodeRecord) -> Episode:
        if rec.cached is not None:
            return rec.cached
        sl = slice(rec.start - self._offset, rec.end - self._offset)
        ep = Episode(
            self._s[sl].copy(), self._a[sl].copy(), self._r[sl].copy(),
            self._s2[sl].copy(), self._term[sl].copy(), self._mu[sl].copy(), validate=False,
        )
        if rec.complete:
            rec.cached = ep
        return ep

    def episodes(self, complete_only: bool = True) -> list[Episode]:
        return [self._build(rec) for rec in self._ordered() if rec.complete or not complete_only]

    def sample_episode(self, rng: np.random.Generator) -> Episode:
        if self._complete_count == 0:
            raise EmptyMemoryError("no complete episode stored")
        # every stored episode but possibly the newest is closed
        if self.length_weighted:
            lengths = np.array([self._recs[k].length for k in range(self._first, self._first + self._complete_count)],
                               dtype=np.float64)
            k = int(rng.choice(len(lengths), p=lengths / lengths.sum()))
        else:
            k = int(rng.integers(self._complete_count))
        return self._build(self._recs[self._first + k])

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform logical indices with replacement."""
        if len(self) == 0:
            raise EmptyMemoryError("replay memory is empty")
        return self._head + rng.integers(len(self), size=batch_size)

    def columns(self, idx: np.ndarray):
        """``(s, a, r, s_next, terminal)`` arrays at logical indices ``idx``."""
        p = np.asarray(idx) - self._offset
        return self._s[p], self._a[p], self._r[p], self._s2[p], self._term[p]

    def episode_bounds(self, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Logical ``(start, end)`` of the episode holding each index."""
        serials = self._serial[np.asarray(idx) - self._offset].tolist()
        starts = np.array([self._recs[k].start for k in serials], dtype=np.int64)
        ends = np.array([self._recs[k].end for k in serials], dtype=np.int64)
        return starts, ends

    def rewards_between(self, lo: int, hi: int) -> np.ndarray:
        return self._r[lo - self._offset:hi - self._offset]

    def _returns(self, rec: _EpisodeRecord, gamma: float) -> np.ndarray:
        if rec.returns is not None and rec.returns[0] == gamma:
            return rec.returns[1]
        rewards = self._r[rec.start - self._offset:rec.end - self._offset].tolist()
        out = [0.0] * len(rewards)
        acc = 0.0
        for i in range(len(rewards) - 1, -1, -1):
            acc = rewards[i] + gamma * acc
            out[i] = acc
        arr = np.array(out)
        if rec.complete:
            rec.returns = (gamma, arr)
        return arr

    def discounted_returns(self, idx: np.ndarray, gamma: float) -> np.ndarray:
        """Discounted reward sum from each index to the end of its episode (no bootstrap)."""
        out = np.empty(len(idx))
        serials = self._serial[np.asarray(idx) - self._offset].tolist()
        for j, (i, k) in enumerate(zip(np.asarray(idx).tolist(), serials)):
            rec = self._recs[k]
            out[j] = self._returns(rec, gamma)[i - rec.start]
        return out

    def sample_positions(self, batch_size: int, rng: np.random.Generator) -> list[tuple[Episode, int]]:
        """Uniform transitions with replacement, returned as ``(episode, offset)`` pairs."""
        idx = self.sample_indices(batch_size, rng)
        built: dict[int, Episode] = {}
        out = []
        for i in idx.tolist():
            k = int(self._serial[i - self._offset])
            rec = self._recs[k]
            if k not in built:
                built[k] = self._build(rec)
            out.append((built[k], i - rec.start))
        return out

    def sample_uniform(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        return [ep[t] for ep, t in self.sample_positions(batch_size, rng)]

    def dump(self, path):
        """Write every stored transition as a packed little-endian record.

        Record layout: ``s`` int64, ``a`` int64, ``r`` float64, ``s_next``
        int64, ``terminal`` uint8. Behaviour probabilities are not saved.
        """
        lo, hi = self._head - self._offset, self._tail - self._offset
        with open(Path(path), "wb") as f:
            for s, a, r, s2, term in zip(self._s[lo:hi].tolist(), self._a[lo:hi].tolist(), self._r[lo:hi].tolist(),
                                         self._s2[lo:hi].tolist(), self._term[lo:hi].tolist()):
                f.write(_RECORD.pack(s, a, r, s2, term))

    @classmethod
    def load(cls, path, capacity: int, length_weighted: bool = False) -> "ReplayMemory":
        """Rebuild a memory from :meth:`dump` output.

        Episode breaks are recovered from terminal flags and from chain breaks;
        the trailing non-terminal episode is left open.
        """
        data = Path(path).read_bytes()
        if len(data) % _RECORD.size:
            raise ValueError("replay dump length is not a whole number of records")
        mem = cls(capacity, length_weighted)
        for s, a, r, s2, term in _RECORD.iter_unpack(data):
            if mem._open is not None and mem._s2[mem._tail - 1 - mem._offset] != s:
                mem.end_episode()
            mem.store(Transition(s, a, r, s2, bool(term)))
        return mem
