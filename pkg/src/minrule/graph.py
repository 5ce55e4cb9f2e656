"""Communication topology: directed neighbor relations between agents.

An edge ``(i, j)`` means agent ``j`` is a neighbor of agent ``i``, i.e. ``i``
receives ``j``'s belief each round. Undirected graphs are stored as pairs of
opposite directed edges.
"""
from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import GenerationError, ParameterError

DEFAULT_ATTEMPTS = 1000


@dataclass(frozen=True)
class Network:
    n_agents: int
    edges: frozenset
    adjacency: tuple

    @classmethod
    def from_edges(cls, n_agents, edges):
        """Build a validated network from an iterable of ``(i, j)`` pairs."""
        n_agents = int(n_agents)
        if n_agents < 1:
            raise ParameterError(f"n_agents must be positive, got {n_agents}")
        edge_set = set()
        for i, j in edges:
            i, j = int(i), int(j)
            if i == j:
                raise ParameterError(f"self-loop on agent {i}")
            if not (0 <= i < n_agents and 0 <= j < n_agents):
                raise ParameterError(f"edge ({i}, {j}) out of range for {n_agents} agents")
            edge_set.add((i, j))
        adj = [[] for _ in range(n_agents)]
        for i, j in edge_set:
            adj[i].append(j)
        adjacency = tuple(tuple(sorted(a)) for a in adj)
        return cls(n_agents, frozenset(edge_set), adjacency)

    @classmethod
    def from_undirected(cls, n_agents, pairs):
        sym = []
        for i, j in pairs:
            sym.append((i, j))
            sym.append((j, i))
        return cls.from_edges(n_agents, sym)

    @property
    def n_edges(self):
        return len(self.edges)

    def edge_arrays(self):
        """Receiver and sender index arrays, ordered by (receiver, sender)."""
        return self._edge_arrays

    @cached_property
    def _edge_arrays(self):
        pairs = [(i, j) for i in range(self.n_agents) for j in self.adjacency[i]]
        if not pairs:
            pairs = np.zeros((0, 2), dtype=np.intp)
        arr = np.array(pairs, dtype=np.intp).reshape(-1, 2)
        receivers, senders = arr[:, 0].copy(), arr[:, 1].copy()
        receivers.setflags(write=False)
        senders.setflags(write=False)
        return receivers, senders

    def out_degrees(self):
        return [len(a) for a in self.adjacency]

    def in_degrees(self):
        deg = [0] * self.n_agents
        for _, j in self.edges:
            deg[j] += 1
        return deg

    def is_undirected(self):
        return all((j, i) in self.edges for i, j in self.edges)


def neighbors(g, i):
    """Sorted neighbor list N_i of agent ``i``."""
    if not 0 <= i < g.n_agents:
        raise ParameterError(f"agent {i} out of range for {g.n_agents} agents")
    return list(g.adjacency[i])


def _reachable(n, adjacency, start):
    seen = [False] * n
    seen[start] = True
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in adjacency[u]:
            if not seen[v]:
                seen[v] = True
                queue.append(v)
    return seen


def _reverse(g):
    rev = [[] for _ in range(g.n_agents)]
    for i, j in g.edges:
        rev[j].append(i)
    return rev


def is_strongly_connected(g):
    """True iff every agent reaches every other agent along directed edges."""
    if g.n_agents == 1:
        return True
    return all(_reachable(g.n_agents, g.adjacency, 0)) and all(
        _reachable(g.n_agents, _reverse(g), 0)
    )


def unreachable_pairs(g):
    """All ordered pairs ``(u, v)`` such that ``v`` cannot be reached from ``u``."""
    out = []
    for u in range(g.n_agents):
        seen = _reachable(g.n_agents, g.adjacency, u)
        out.extend((u, v) for v in range(g.n_agents) if not seen[v])
    return out


def _try_pairing(n, k, rng):
    # stub pairing; failed stubs are re-shuffled until no simple completion remains
    edges = set()
    stubs = list(range(n)) * k
    while stubs:
        leftover = defaultdict(int)
        rng.shuffle(stubs)
        it = iter(stubs)
        for a, b in zip(it, it):
            if a > b:
                a, b = b, a
            if a != b and (a, b) not in edges:
                edges.add((a, b))
            else:
                leftover[a] += 1
                leftover[b] += 1
        if leftover:
            nodes = sorted(leftover)
            if not any(
                (a, b) not in edges for x, a in enumerate(nodes) for b in nodes[x + 1:]
            ):
                return None
        stubs = [v for v in sorted(leftover) for _ in range(leftover[v])]
    return edges


def generate_k_regular(n, k, seed, max_attempts=DEFAULT_ATTEMPTS):
    """Random undirected k-regular strongly connected network on ``n`` agents.

    Deterministic in ``seed``. Attempts that produce a non-simple pairing or a
    disconnected graph are discarded.
    """
    if not (n > k >= 1):
        raise ParameterError(f"need n > k >= 1, got n={n}, k={k}")
    if (n * k) % 2:
        raise ParameterError(f"n*k must be even for a k-regular graph (n={n}, k={k})")
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        pairs = _try_pairing(n, k, rng)
        if pairs is None:
            continue
        g = Network.from_undirected(n, sorted(pairs))
        if is_strongly_connected(g):
            return g
    raise GenerationError(
        f"no connected {k}-regular graph on {n} agents within {max_attempts} attempts"
    )


def circulant(n, k):
    """Ring lattice: each agent linked to the k/2 nearest agents on either side."""
    if not (n > k >= 2) or k % 2:
        raise ParameterError(f"circulant needs even k with n > k >= 2, got n={n}, k={k}")
    pairs = [(i, (i + d) % n) for i in range(n) for d in range(1, k // 2 + 1)]
    return Network.from_undirected(n, pairs)


def read_edge_list(path, n_agents=None):
    """Load ``i j`` lines (0-indexed, directed ``(i, j)``); '#' starts a comment."""
    edges = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParameterError(f"{path}:{lineno}: expected 'i j', got {raw!r}")
        try:
            edges.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise ParameterError(f"{path}:{lineno}: non-integer agent id in {raw!r}") from None
    if n_agents is None:
        n_agents = 1 + max((max(e) for e in edges), default=0)
    return Network.from_edges(n_agents, edges)


def write_edge_list(g, path):
    lines = [f"# {g.n_agents} agents"]
    lines += [f"{i} {j}" for i, j in sorted(g.edges)]
    Path(path).write_text("\n".join(lines) + "\n")
