"""Undirected agent graphs and their sub-graphical structural analyses.

A :class:`Topology` is a simple, connected, undirected graph over agent
vertices ``0..n-1``. From it we derive everything the reward-shaping and
metric layers consume: hop distances, exact shortest-path betweenness,
Burt's constraint (and its complement, bridging capacity), triangle-based
clique-neighbor sets, and the critical-connection (highest-betweenness
path) neighbor sets.

All functions here are pure; :func:`analyze` results are cached per
topology and returned as read-only arrays, so they can be shared freely
across concurrent rollout workers.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# Relative tolerance used when collecting the set of vertices whose
# betweenness ties with the maximum.
BETWEENNESS_TIE_RTOL = 1e-9

# Vertex counts of the built-in named families.
NAMED_SIZES = {
    "complete": 5,
    "cycle": 5,
    "wheel": 5,
    "star": 5,
    "bipartite23": 5,
    "house": 5,
}


class TopologyError(ValueError):
    """Malformed or unsupported graph input."""


@dataclass(frozen=True)
class Topology:
    """Simple connected undirected graph over vertices ``0..n-1``.

    ``edges`` holds canonical ``(u, v)`` pairs with ``u < v``. Instances
    are immutable and hashable so analyses can be cached per topology.
    """

    n: int
    edges: frozenset

    def adjacency(self) -> np.ndarray:
        """n x n boolean adjacency matrix (symmetric, zero diagonal)."""
        a = np.zeros((self.n, self.n), dtype=bool)
        for u, v in self.edges:
            a[u, v] = a[v, u] = True
        a.setflags(write=False)
        return a

    def neighbors(self, v: int) -> frozenset:
        return frozenset(
            (b if a == v else a) for a, b in self.edges if v in (a, b)
        )

    def degree(self, v: int) -> int:
        return sum(1 for e in self.edges if v in e)


def build(n: int, edges) -> Topology:
    """Validate and canonicalize an edge collection into a Topology.

    Rejects self-loops, out-of-range vertices, graphs with fewer than two
    vertices, and disconnected graphs (listing the components found).
    """
    if n < 2:
        raise TopologyError(f"need at least 2 vertices, got n={n}")
    canon = set()
    for u, v in edges:
        u, v = int(u), int(v)
        if u == v:
            raise TopologyError(f"self-loop at vertex {u}")
        if not (0 <= u < n and 0 <= v < n):
            raise TopologyError(f"edge ({u}, {v}) out of range for n={n}")
        canon.add((min(u, v), max(u, v)))
    t = Topology(n=n, edges=frozenset(canon))
    comps = _components(t)
    if len(comps) > 1:
        parts = ", ".join("{" + ",".join(map(str, sorted(c))) + "}" for c in comps)
        raise TopologyError(f"graph is disconnected: components {parts}")
    return t


def _components(t: Topology) -> list:
    adj = {v: set() for v in range(t.n)}
    for u, v in t.edges:
        adj[u].add(v)
        adj[v].add(u)
    seen: set = set()
    comps = []
    for start in range(t.n):
        if start in seen:
            continue
        comp = {start}
        queue = deque([start])
        while queue:
            cur = queue.popleft()
            for nxt in adj[cur]:
                if nxt not in comp:
                    comp.add(nxt)
                    queue.append(nxt)
        seen |= comp
        comps.append(comp)
    return comps


def build_named(name: str, n: int) -> Topology:
    """Construct one of the catalog families by name.

    The catalog is fixed at 5 vertices per family. The house graph is
    laid out so its unique triangle is {1, 2, 4} and the two max-degree
    vertices are {1, 2}.
    """
    if name not in NAMED_SIZES:
        raise TopologyError(
            f"unknown topology {name!r}; known: {', '.join(sorted(NAMED_SIZES))}"
        )
    want = NAMED_SIZES[name]
    if n != want:
        raise TopologyError(f"topology {name!r} has {want} vertices, got n={n}")
    if name == "complete":
        edges = [(u, v) for u in range(n) for v in range(u + 1, n)]
    elif name == "cycle":
        edges = [(i, (i + 1) % n) for i in range(n)]
    elif name == "star":
        edges = [(0, i) for i in range(1, n)]
    elif name == "wheel":
        # hub 0 plus a 4-cycle rim
        edges = [(0, i) for i in range(1, n)] + [(1, 2), (2, 3), (3, 4), (4, 1)]
    elif name == "bipartite23":
        edges = [(u, v) for u in (0, 1) for v in (2, 3, 4)]
    else:  # house
        edges = [(0, 1), (0, 3), (3, 2), (1, 2), (1, 4), (2, 4)]
    return build(n, edges)


def load_edge_list(text: str) -> Topology:
    """Parse the edge-list document format.

    First meaningful line is a header ``n <count>``; every following line
    is one ``u v`` pair. ``#`` starts a comment; blank lines are ignored.
    """
    n = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 2 or parts[0] != "n":
                raise TopologyError(
                    f"line {lineno}: expected header 'n <count>', got {raw!r}"
                )
            try:
                n = int(parts[1])
            except ValueError:
                raise TopologyError(f"line {lineno}: bad vertex count {parts[1]!r}")
            continue
        if len(parts) != 2:
            raise TopologyError(f"line {lineno}: expected 'u v', got {raw!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise TopologyError(f"line {lineno}: non-integer vertex in {raw!r}")
        edges.append((u, v))
    if n is None:
        raise TopologyError("empty edge-list document (missing 'n <count>' header)")
    return build(n, edges)


@dataclass(frozen=True)
class StructuralProfile:
    """Cached per-vertex structural quantities of one topology.

    ``distance`` holds hop counts; ``betweenness`` is unnormalized
    shortest-path betweenness with endpoint pairs excluded and fractional
    credit split over equal-length paths; ``bridging`` is ``1 - C_i``.
    """

    degree: tuple
    distance: np.ndarray
    betweenness: np.ndarray
    burt_constraint: np.ndarray
    bridging: np.ndarray
    max_betweenness_set: frozenset


@dataclass(frozen=True)
class PortfolioSet:
    """Per-vertex preferred-neighbor sets: nearest, clique, and hbn."""

    nearest: tuple
    clique: tuple
    hbn: tuple


def _bfs_shortest_paths(adj_sets, source: int, n: int):
    """Single-source BFS returning (distance, path counts, predecessors).

    Distances are hop counts; ``sigma[v]`` counts distinct shortest paths
    from the source to ``v``.
    """
    dist = [-1] * n
    sigma = [0] * n
    preds = [[] for _ in range(n)]
    dist[source] = 0
    sigma[source] = 1
    order = []
    queue = deque([source])
    while queue:
        cur = queue.popleft()
        order.append(cur)
        for nxt in adj_sets[cur]:
            if dist[nxt] < 0:
                dist[nxt] = dist[cur] + 1
                queue.append(nxt)
            if dist[nxt] == dist[cur] + 1:
                sigma[nxt] += sigma[cur]
                preds[nxt].append(cur)
    return dist, sigma, preds, order


@lru_cache(maxsize=None)
def analyze(t: Topology) -> StructuralProfile:
    """Compute degrees, distances, betweenness, and Burt's constraint.

    Betweenness uses exact all-pairs shortest-path counting (Brandes'
    dependency accumulation); each unordered endpoint pair contributes
    once. Burt's constraint is

        C_i = sum_{j in N_i} (p_ij + sum_{q in N_i, q != i,j} p_iq p_qj)^2

    with p_ij the share of i's ties that go to j. For an unweighted
    simple graph p_ij = a_ij / degree(i).
    """
    n = t.n
    adj = t.adjacency()
    adj_sets = [set(np.flatnonzero(adj[v]).tolist()) for v in range(n)]
    degree = tuple(len(adj_sets[v]) for v in range(n))
    if min(degree) == 0:
        raise TopologyError("vertex with degree 0 cannot form tie shares")

    dist = np.zeros((n, n), dtype=np.int64)
    betweenness = np.zeros(n, dtype=np.float64)
    for s in range(n):
        d, sigma, preds, order = _bfs_shortest_paths(adj_sets, s, n)
        dist[s, :] = d
        delta = [0.0] * n
        for w in reversed(order):
            for v in preds[w]:
                delta[v] += (sigma[v] / sigma[w]) * (1.0 + delta[w])
            if w != s:
                betweenness[w] += delta[w]
    # each unordered pair was accumulated from both endpoints
    betweenness /= 2.0

    # dyadic tie shares; rows sum to 1
    p = adj.astype(np.float64)
    p /= p.sum(axis=1, keepdims=True)
    constraint = np.zeros(n, dtype=np.float64)
    for i in range(n):
        ci = 0.0
        for j in adj_sets[i]:
            indirect = sum(p[i, q] * p[q, j] for q in adj_sets[i] if q != j)
            ci += (p[i, j] + indirect) ** 2
        constraint[i] = ci
    bridging = 1.0 - constraint

    top = betweenness.max()
    tol = BETWEENNESS_TIE_RTOL * max(1.0, abs(top))
    max_set = frozenset(int(v) for v in np.flatnonzero(betweenness >= top - tol))

    for arr in (dist, betweenness, constraint, bridging):
        arr.setflags(write=False)
    return StructuralProfile(
        degree=degree,
        distance=dist,
        betweenness=betweenness,
        burt_constraint=constraint,
        bridging=bridging,
        max_betweenness_set=max_set,
    )


def clique_neighbors(t: Topology) -> tuple:
    """Per-vertex sets of neighbors sharing at least one triangle.

    ``k`` is a clique-neighbor of ``i`` iff they are adjacent and some
    common neighbor closes a triangle over the pair.
    """
    adj = t.adjacency()
    n = t.n
    out = []
    for i in range(n):
        members = set()
        for k in np.flatnonzero(adj[i]):
            if np.any(adj[i] & adj[k]):
                members.add(int(k))
        out.append(frozenset(members))
    return tuple(out)


def hbn_neighbors(t: Topology, profile: StructuralProfile) -> tuple:
    """Per-vertex critical-connection neighbor sets.

    Targets of ego ``i`` are the maximal-betweenness vertices other than
    ``i`` itself. ``m`` belongs to hbn(i) iff it sits on some shortest
    path from ``i`` to a target, i.e. d(i,j) = d(i,m) + d(m,j) for some
    target ``j``. A target trivially satisfies the identity (d(j,j)=0),
    so targets are always members; the ego never is. A vertex that is
    itself the unique betweenness maximum has an empty set.
    """
    n = t.n
    dist = profile.distance
    out = []
    for i in range(n):
        targets = profile.max_betweenness_set - {i}
        members = set()
        for m in range(n):
            if m == i:
                continue
            for j in targets:
                if dist[i, j] == dist[i, m] + dist[m, j]:
                    members.add(m)
                    break
        out.append(frozenset(members))
    return tuple(out)


def portfolios(t: Topology, profile: StructuralProfile | None = None) -> PortfolioSet:
    """Bundle the three per-vertex preferred-neighbor set families."""
    if profile is None:
        profile = analyze(t)
    nearest = tuple(t.neighbors(v) for v in range(t.n))
    return PortfolioSet(
        nearest=nearest,
        clique=clique_neighbors(t),
        hbn=hbn_neighbors(t, profile),
    )


def tctr(profile: StructuralProfile) -> tuple:
    """Topology-constrained theoretical range of bridging capacity.

    Bounds the reward-weighted bridging index for any non-negative
    reward vector: (min_i 1-C_i, max_i 1-C_i).
    """
    return (float(profile.bridging.min()), float(profile.bridging.max()))
