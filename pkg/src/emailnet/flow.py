"""Dinic max-flow on directed networks with float capacities.

Shared by the graph s-t cut and hypergraph gadget-cut solvers. Residual
arcs are kept explicitly so callers can read off the canonical minimum
cut as the set of nodes reachable from the source in the residual
network.
"""

from collections import deque

# residual capacities below this are treated as saturated
EPS = 1e-12


class FlowNetwork:
    """Directed flow network over nodes 0..n-1."""

    def __init__(self, n: int):
        self.n = n
        self.adj: list[list[int]] = [[] for _ in range(n)]
        self.to: list[int] = []
        self.cap: list[float] = []

    def add_arc(self, u: int, v: int, cap: float) -> int:
        """Add arc u->v with the given capacity (plus a 0-capacity reverse).

        Returns the arc index; the reverse arc is at index^1.
        """
        if cap < 0:
            raise ValueError("capacity must be nonnegative")
        idx = len(self.to)
        self.to.append(v)
        self.cap.append(float(cap))
        self.adj[u].append(idx)
        self.to.append(u)
        self.cap.append(0.0)
        self.adj[v].append(idx + 1)
        return idx

    def add_undirected(self, u: int, v: int, cap: float) -> None:
        """Model an undirected edge as a pair of antiparallel arcs."""
        self.add_arc(u, v, cap)
        self.add_arc(v, u, cap)

    def _bfs_levels(self, s: int, t: int) -> list[int] | None:
        level = [-1] * self.n
        level[s] = 0
        q = deque([s])
        while q:
            u = q.popleft()
            for idx in self.adj[u]:
                v = self.to[idx]
                if self.cap[idx] > EPS and level[v] < 0:
                    level[v] = level[u] + 1
                    q.append(v)
        return level if level[t] >= 0 else None

    def _augment(self, s: int, t: int, level: list[int], it: list[int]) -> float:
        # iterative DFS along the level graph; path holds arc indices
        path: list[int] = []
        u = s
        while True:
            if u == t:
                pushed = min(self.cap[idx] for idx in path)
                for idx in path:
                    self.cap[idx] -= pushed
                    self.cap[idx ^ 1] += pushed
                return pushed
            advanced = False
            while it[u] < len(self.adj[u]):
                idx = self.adj[u][it[u]]
                v = self.to[idx]
                if self.cap[idx] > EPS and level[v] == level[u] + 1:
                    path.append(idx)
                    u = v
                    advanced = True
                    break
                it[u] += 1
            if advanced:
                continue
            if not path:
                return 0.0
            # dead end: retreat one step and skip the arc we came along
            idx = path.pop()
            u = self.to[idx ^ 1]
            it[u] += 1

    def max_flow(self, s: int, t: int) -> float:
        """Run Dinic's algorithm; the network keeps its residual state."""
        if s == t:
            raise ValueError("source equals sink")
        total = 0.0
        while True:
            level = self._bfs_levels(s, t)
            if level is None:
                return total
            it = [0] * self.n
            while True:
                pushed = self._augment(s, t, level, it)
                if pushed <= 0:
                    break
                total += pushed

    def source_side(self, s: int) -> set[int]:
        """Nodes reachable from s through residual capacity (call after max_flow)."""
        seen = {s}
        q = deque([s])
        while q:
            u = q.popleft()
            for idx in self.adj[u]:
                v = self.to[idx]
                if self.cap[idx] > EPS and v not in seen:
                    seen.add(v)
                    q.append(v)
        return seen
