"""Length quasi-metrics induced by directed weighted graphs.

Shortest-path distances of a graph with positive, possibly asymmetric edge
weights form a quasi-metric in which every distance is realized by a chain.
Adding a vertex potential ``f`` to edge weights (``w + f(v) - f(u)``) shifts
every path length by ``f(end) - f(start)``, so distances shift the same way
and minimizing chains do not change.
"""
from __future__ import annotations

import heapq
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InputError, MathFailure
from .qmetric import (
    SYMMETRIC,
    FiniteQuasiMetric,
    _simplify,
    ball,
    symmetrize,
    to_rational,
    validate,
)
from .almost_iso import Bijection, first_failing_triple

THREADS_ENV = "QUASIMET_THREADS"


def worker_count() -> int:
    """Worker cap from ``QUASIMET_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class DirectedWeightedGraph:
    n: int
    edges: tuple  # (u, v, w) triples
    coords: tuple | None = None

    def __post_init__(self):
        if self.n < 1:
            raise InputError("graph needs at least one vertex")
        clean = []
        for e in self.edges:
            u, v, w = e
            u, v = int(u), int(v)
            if isinstance(w, np.floating):
                w = float(w)
            elif isinstance(w, np.integer):
                w = int(w)
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise InputError(f"edge {e} has an endpoint out of range")
            if u == v:
                raise InputError(f"self-loop at vertex {u}")
            if isinstance(w, float) and not math.isfinite(w):
                raise InputError(f"edge ({u}, {v}) has non-finite weight")
            if not w > 0:
                raise InputError(f"edge ({u}, {v}) has nonpositive weight {w}")
            clean.append((u, v, w))
        object.__setattr__(self, "edges", tuple(clean))
        if self.coords is not None:
            c = tuple(tuple(float(a) for a in p) for p in self.coords)
            if len(c) != self.n:
                raise InputError("coords must list one point per vertex")
            object.__setattr__(self, "coords", c)

    @property
    def exact(self) -> bool:
        return not any(isinstance(w, float) for _, _, w in self.edges)

    def adjacency(self) -> list:
        """Per-vertex list of (v, w), parallel edges collapsed to the lightest."""
        best = {}
        for u, v, w in self.edges:
            if (u, v) not in best or w < best[(u, v)]:
                best[(u, v)] = w
        adj = [[] for _ in range(self.n)]
        for (u, v), w in sorted(best.items()):
            adj[u].append((v, w))
        return adj

    def reverse_adjacency(self) -> list:
        radj = [[] for _ in range(self.n)]
        for u, row in enumerate(self.adjacency()):
            for v, w in row:
                radj[v].append((u, w))
        return radj


def graph_from_rationals(n, edges, coords=None) -> DirectedWeightedGraph:
    return DirectedWeightedGraph(n, tuple((u, v, _simplify(to_rational(w))) for u, v, w in edges), coords)


def dijkstra(adj: list, source: int) -> list:
    """Label-setting single-source distances; ``None`` marks unreachable."""
    n = len(adj)
    dist = [None] * n
    dist[source] = 0
    done = [False] * n
    heap = [(0, source)]
    while heap:
        du, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for v, w in adj[u]:
            nd = du + w
            if dist[v] is None or nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


@dataclass
class ShortestPathTable:
    """All-pairs distances of a graph, with lazily derived predecessors.

    ``dist[s][t]`` is ``None`` when ``t`` is unreachable from ``s``. Among
    equally short paths the predecessor with the smallest index wins, so
    reconstructed chains are deterministic.
    """

    graph: DirectedWeightedGraph
    dist: list
    tol: float = 0.0
    _parents: dict = field(default_factory=dict, repr=False)

    @property
    def n(self):
        return self.graph.n

    def unreachable(self) -> list:
        return [(s, t) for s in range(self.n) for t in range(self.n) if self.dist[s][t] is None]

    def is_complete(self) -> bool:
        return not self.unreachable()

    def parents(self, source: int) -> list:
        if source not in self._parents:
            self._parents[source] = _tie_broken_parents(self.graph, self.dist[source], source, self.tol)
        return self._parents[source]

    def chain(self, source: int, target: int) -> list:
        if self.dist[source][target] is None:
            raise MathFailure(f"vertex {target} unreachable from {source}", {"pair": [source, target]})
        par = self.parents(source)
        out = [target]
        while out[-1] != source:
            out.append(par[out[-1]])
        return out[::-1]

    def to_space(self, labels=None, tolerance=None) -> FiniteQuasiMetric:
        if not self.is_complete():
            raise MathFailure("graph is not strongly connected", {"unreachable": self.unreachable()[:20]})
        arithmetic = "rational" if self.graph.exact else "float"
        if tolerance is None and arithmetic == "float":
            tolerance = max(self.tol, 1e-9)
        return validate(self.dist, tolerance, labels=labels, arithmetic=arithmetic)


def _tie_broken_parents(g, dist, source, tol):
    par = [None] * g.n
    for v, row in enumerate(g.reverse_adjacency()):
        if v == source or dist[v] is None:
            continue
        for u, w in row:  # sorted by u
            if dist[u] is None:
                continue
            gap = dist[u] + w - dist[v]
            if gap == 0 or (tol and abs(gap) <= tol * max(1.0, abs(dist[v]))):
                par[v] = u
                break
    return par


def induced_quasimetric(g: DirectedWeightedGraph, *, backend: str = "auto", tol: float = 1e-12) -> ShortestPathTable:
    """All-pairs shortest paths by one label-setting run per source.

    ``backend="python"`` uses the built-in Dijkstra and keeps exact rational
    weights exact; ``"scipy"`` hands float graphs to
    ``scipy.sparse.csgraph.dijkstra``. ``"auto"`` picks python for exact
    weights and scipy otherwise.
    """
    if backend == "auto":
        backend = "python" if g.exact else "scipy"
    if backend == "python":
        adj = g.adjacency()
        workers = worker_count()
        if workers > 1:
            with ThreadPoolExecutor(workers) as ex:
                dist = list(ex.map(lambda s: dijkstra(adj, s), range(g.n)))
        else:
            dist = [dijkstra(adj, s) for s in range(g.n)]
    elif backend == "scipy":
        dist = _scipy_all_pairs(g)
    else:
        raise InputError(f"unknown backend {backend!r}")
    return ShortestPathTable(g, dist, 0.0 if g.exact else tol)


def _csr(g):
    from scipy.sparse import csr_matrix

    best = {}
    for u, v, w in g.edges:
        w = float(w)
        if (u, v) not in best or w < best[(u, v)]:
            best[(u, v)] = w
    rows, cols = zip(*best.keys()) if best else ((), ())
    return csr_matrix((list(best.values()), (rows, cols)), shape=(g.n, g.n))


def _scipy_all_pairs(g, sources=None):
    from scipy.sparse.csgraph import dijkstra as sp_dijkstra

    D = sp_dijkstra(_csr(g), directed=True, indices=sources)
    D = np.atleast_2d(D)
    return [[None if math.isinf(x) else float(x) for x in row] for row in D]


def single_source(g: DirectedWeightedGraph, sources) -> list:
    """Distance rows for a few sources only (float graphs go through scipy)."""
    sources = list(sources)
    if g.exact:
        adj = g.adjacency()
        return [dijkstra(adj, s) for s in sources]
    return _scipy_all_pairs(g, sources)


@dataclass(frozen=True)
class EdgeSlack:
    u: int
    v: int
    slack: object


class PotentialError(MathFailure):
    pass


def apply_potential(g: DirectedWeightedGraph, f) -> DirectedWeightedGraph:
    """Reweight every edge to ``w + f(v) - f(u)``; all new weights must stay positive."""
    if len(f) != g.n:
        raise InputError("potential must have one value per vertex")
    if g.exact:
        f = [_simplify(to_rational(x)) for x in f]
    bad = []
    new = []
    for u, v, w in g.edges:
        nw = w + f[v] - f[u]
        if g.exact:
            nw = _simplify(Fraction(nw))
        if not nw > 0:
            bad.append(EdgeSlack(u, v, nw))
        new.append((u, v, nw))
    if bad:
        raise PotentialError(
            f"{len(bad)} edge(s) would get nonpositive weight",
            [{"edge": [e.u, e.v], "slack": float(e.slack)} for e in bad],
        )
    return DirectedWeightedGraph(g.n, tuple(new), g.coords)


# local vs global almost isometries


@dataclass
class LocalCheckReport:
    radius: object
    passed: list  # per vertex
    flagged: list  # vertices whose image ball left the symmetrized ball
    failures: dict  # vertex -> first failing (x, y, z) in local indices of the source

    @property
    def all_pass(self) -> bool:
        return all(self.passed)

    def to_json(self):
        return {
            "radius": float(self.radius),
            "all_pass": self.all_pass,
            "passed": list(self.passed),
            "flagged": list(self.flagged),
            "failures": {str(k): list(v) for k, v in self.failures.items()},
        }


def _as_space(obj) -> FiniteQuasiMetric:
    if isinstance(obj, FiniteQuasiMetric):
        return obj
    if isinstance(obj, DirectedWeightedGraph):
        return induced_quasimetric(obj).to_space()
    raise InputError(f"expected a space or a graph, got {type(obj).__name__}")


def _restrict(space: FiniteQuasiMetric, members) -> FiniteQuasiMetric:
    idx = np.asarray(members)
    sub = space.d[np.ix_(idx, idx)]
    return FiniteQuasiMetric(tuple(space.labels[i] for i in idx), sub, space.arithmetic, space.tol)


def check_local_almost_isometry(mapping, g1, g2, radius) -> LocalCheckReport:
    """Per-vertex test of T-preservation on symmetric balls.

    For each vertex ``x`` the neighbourhood is ``U = B+(x, r) & B-(x, r)`` in
    the source. The restricted map ``U -> phi(U)`` must preserve T, and
    ``phi(U)`` must lie in the symmetrized-metric ball of radius ``r`` about
    ``phi(x)``; a vertex whose image leaves that ball is flagged and fails.
    """
    s1, s2 = _as_space(g1), _as_space(g2)
    if not radius > 0:
        raise InputError("radius must be positive")
    m = tuple(int(i) for i in mapping)
    Bijection(s1, s2, m)  # validates bijectivity
    sym2 = symmetrize(s2).d
    r = to_rational(radius) if s2.exact else radius
    passed, flagged, failures = [], [], {}
    for x in range(s1.n):
        members = sorted(ball(s1, x, radius, SYMMETRIC).members)
        image = [m[y] for y in members]
        ok = True
        if any(not sym2[m[x], z] < r for z in image):
            flagged.append(x)
            ok = False
        sub1 = _restrict(s1, members)
        sub2 = _restrict(s2, image)
        failing = first_failing_triple(Bijection(sub1, sub2, tuple(range(len(members)))))
        if failing is not None:
            ok = False
            failures[x] = [members[i] for i in failing[0]]
        passed.append(ok)
    return LocalCheckReport(radius, passed, flagged, failures)


def counterexample_spaces(n: int, spacing, arithmetic: str = "rational"):
    """Collinear points ``p_i = i * spacing`` with ``|x - y|`` and ``min(|x - y|, 1)``.

    The identity between them is a local isometry that is not global as soon
    as some gap reaches 1; the capped metric is not a length space.
    """
    if n < 3:
        raise InputError("need at least three points")
    if not spacing > 0:
        raise InputError("spacing must be positive")
    step = to_rational(spacing) if arithmetic == "rational" else float(spacing)
    pts = [i * step for i in range(n)]
    d1 = [[abs(a - b) for b in pts] for a in pts]
    d2 = [[min(abs(a - b), 1) for b in pts] for a in pts]
    labels = [f"p{i}" for i in range(n)]
    return (
        validate(d1, labels=labels, arithmetic=arithmetic),
        validate(d2, labels=labels, arithmetic=arithmetic),
    )


# grids


STENCILS = {
    4: [(1, 0), (0, 1), (-1, 0), (0, -1)],
    8: [(1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)],
}
STENCILS[16] = STENCILS[8] + [
    (2, 1), (1, 2), (-1, 2), (-2, 1), (-2, -1), (-1, -2), (1, -2), (2, -1),
]


def grid_graph(rows: int, cols: int, weight, *, stencil: int = 8, coords=None) -> DirectedWeightedGraph:
    """Grid graph; ``weight(i0, j0, i1, j1)`` gives the weight of each directed edge.

    Vertex ``(i, j)`` has index ``i * cols + j``.
    """
    if stencil not in STENCILS:
        raise InputError(f"stencil must be one of {sorted(STENCILS)}")
    edges = []
    for i in range(rows):
        for j in range(cols):
            for di, dj in STENCILS[stencil]:
                a, b = i + di, j + dj
                if 0 <= a < rows and 0 <= b < cols:
                    edges.append((i * cols + j, a * cols + b, weight(i, j, a, b)))
    return DirectedWeightedGraph(rows * cols, tuple(edges), coords)


def discretize_chart(F, domain, resolution: int, *, stencil: int = 16) -> DirectedWeightedGraph:
    """Grid of ``resolution x resolution`` nodes over ``domain`` with midpoint-rule edge weights.

    ``F(x, v)`` is evaluated at the edge midpoint on the edge vector, which is
    exact for metrics constant in ``x``. Vertex ``(i, j)`` (row ``i`` along y,
    column ``j`` along x) has index ``i * resolution + j``.
    """
    if resolution < 2:
        raise InputError("resolution must be at least 2")
    x0, x1, y0, y1 = domain
    xs = np.linspace(x0, x1, resolution)
    ys = np.linspace(y0, y1, resolution)
    pts = [(float(xs[j]), float(ys[i])) for i in range(resolution) for j in range(resolution)]

    def weight(i0, j0, i1, j1):
        p = np.array([xs[j0], ys[i0]])
        q = np.array([xs[j1], ys[i1]])
        return float(F((p + q) / 2, q - p))

    return grid_graph(resolution, resolution, weight, stencil=stencil, coords=pts)
