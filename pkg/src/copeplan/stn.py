"""Simple temporal networks with value semantics and incremental solving.

Events are named time points; a constraint (u, v, b) encodes t(v) - t(u) <= b.
Every event is implicitly at or after the origin. Networks are persistent:
add_event and add_constraint return new networks, so search nodes can share
history safely. The incremental all-pairs matrix is exact because a single
new edge can only improve a shortest path once when no negative cycle exists;
recompute() is the from-scratch oracle for that claim.
"""

import math

import numpy as np

ORIGIN = "origin"
INF = math.inf
# separation between a condition's time and the effect that achieves it
EPSILON_SEPARATION = 0.001
# networks above this size answer recompute() queries per-event instead
FW_MAX_EVENTS = 64


class Stn:
    __slots__ = ("events", "index", "dist", "constraints", "consistent")

    def __init__(self):
        self.events = (ORIGIN,)
        self.index = {ORIGIN: 0}
        self.dist = np.zeros((1, 1))
        self.constraints = ()
        self.consistent = True

    def _clone(self) -> "Stn":
        s = Stn.__new__(Stn)
        s.events = self.events
        s.index = self.index
        s.dist = self.dist
        s.constraints = self.constraints
        s.consistent = self.consistent
        return s

    def add_event(self, name: str) -> "Stn":
        if name in self.index:
            raise ValueError(f"event {name!r} already present")
        s = self._clone()
        s.events = self.events + (name,)
        s.index = {**self.index, name: len(self.events)}
        n = len(s.events)
        dist = np.full((n, n), INF)
        dist[: n - 1, : n - 1] = self.dist
        dist[n - 1, n - 1] = 0.0
        # nonnegativity: the new event sits at or after the origin, so its
        # only outgoing edge runs to the origin and onward from there
        dist[n - 1, : n - 1] = self.dist[0, :]
        s.dist = dist
        s.constraints = self.constraints + ((name, ORIGIN, 0.0),)
        return s

    def add_constraint(self, from_event: str, to_event: str, bound: float) -> "Stn":
        try:
            u = self.index[from_event]
            v = self.index[to_event]
        except KeyError as exc:
            raise KeyError(f"unknown event {exc.args[0]!r}") from None
        s = self._clone()
        s.constraints = self.constraints + ((from_event, to_event, float(bound)),)
        if not self.consistent:
            return s
        through = self.dist[:, u, None] + (bound + self.dist[None, v, :])
        s.dist = np.minimum(self.dist, through)
        if np.diagonal(s.dist).min() < 0:
            s.consistent = False
        return s

    def solve(self):
        """(consistent, tmin, tmax); the maps are empty when inconsistent."""
        if not self.consistent:
            return False, {}, {}
        tmin = {e: -self.dist[i, 0] for e, i in self.index.items()}
        tmax = {e: self.dist[0, i] for e, i in self.index.items()}
        return True, tmin, tmax

    def tmin(self, event: str) -> float:
        return -self.dist[self.index[event], 0]

    def tmax(self, event: str) -> float:
        return self.dist[0, self.index[event]]


def _edge_matrix(events, constraints):
    index = {e: i for i, e in enumerate(events)}
    n = len(events)
    adj = np.full((n, n), INF)
    np.fill_diagonal(adj, 0.0)
    for u, v, b in constraints:
        if b < adj[index[u], index[v]]:
            adj[index[u], index[v]] = b
    return adj


def _bellman_ford(adj, source):
    n = adj.shape[0]
    dist = adj[source].copy()
    dist[source] = 0.0
    for _ in range(n - 1):
        relaxed = np.min(dist[:, None] + adj, axis=0)
        new = np.minimum(dist, relaxed)
        if np.array_equal(new, dist):
            return dist, True
        dist = new
    relaxed = np.min(dist[:, None] + adj, axis=0)
    return dist, not np.any(relaxed < dist)


def recompute(stn: Stn):
    """From-scratch (consistent, tmin, tmax) for oracle comparisons.

    Small networks get a full Floyd-Warshall closure; larger ones answer the
    two needed single-source queries (origin outward for tmax, reversed for
    tmin) with Bellman-Ford.
    """
    adj = _edge_matrix(stn.events, stn.constraints)
    n = len(stn.events)
    if n <= FW_MAX_EVENTS:
        dist = adj.copy()
        for k in range(n):
            np.minimum(dist, dist[:, k, None] + dist[None, k, :], out=dist)
        if np.diagonal(dist).min() < 0:
            return False, {}, {}
        tmin = {e: -dist[stn.index[e], 0] for e in stn.events}
        tmax = {e: dist[0, stn.index[e]] for e in stn.events}
        return True, tmin, tmax
    fwd, ok_f = _bellman_ford(adj, 0)
    back, ok_b = _bellman_ford(adj.T, 0)
    if not (ok_f and ok_b):
        return False, {}, {}
    tmin = {e: -back[stn.index[e]] for e in stn.events}
    tmax = {e: fwd[stn.index[e]] for e in stn.events}
    return True, tmin, tmax
