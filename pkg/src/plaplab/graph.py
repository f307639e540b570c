"""Finite weighted graphs, vertex measures, Dirichlet domains.

Vertex ids are strings. Everything that iterates over vertices does so in
lexicographic order, so argmax/tie-breaking is reproducible.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    AsymmetricInput,
    DegenerateSize,
    DisconnectedAfterRetries,
    EdgeListParseError,
    EmptyInterior,
    IsolatedVertex,
    NonpositiveWeight,
    SelfLoop,
    UnknownVertex,
)

__all__ = [
    "WeightedGraph",
    "DirichletDomain",
    "build_graph",
    "boundary_of",
    "induced_connected",
    "dirichlet_domain",
    "generate_graph",
    "parse_edge_list",
    "read_edge_list",
    "format_edge_list",
]


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Immutable symmetric weighted graph stored in CSR form.

    ``indptr/indices/weights`` hold both orientations of every edge;
    ``measure[i]`` is the weighted degree of ``vertices[i]``.
    """

    vertices: tuple[str, ...]
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    measure: np.ndarray
    index: Mapping[str, int] = field(repr=False)

    def __post_init__(self):
        for arr in (self.indptr, self.indices, self.weights, self.measure):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.vertices)

    def __len__(self):
        return self.n

    def __contains__(self, x) -> bool:
        return x in self.index

    def idx(self, x: str) -> int:
        try:
            return self.index[x]
        except KeyError:
            raise UnknownVertex(f"unknown vertex {x!r}") from None

    def mu(self, x: str) -> float:
        return float(self.measure[self.idx(x)])

    def neighbors(self, x: str) -> tuple[str, ...]:
        i = self.idx(x)
        return tuple(self.vertices[j] for j in self.indices[self.indptr[i]:self.indptr[i + 1]])

    def weight(self, x: str, y: str) -> float:
        """Edge weight, 0.0 when ``x`` and ``y`` are not adjacent."""
        i, j = self.idx(x), self.idx(y)
        row = self.indices[self.indptr[i]:self.indptr[i + 1]]
        k = np.searchsorted(row, j)
        if k < len(row) and row[k] == j:
            return float(self.weights[self.indptr[i] + k])
        return 0.0

    def edges(self):
        """Yield ``(x, y, w)`` once per edge with ``x < y``."""
        for i in range(self.n):
            for k in range(self.indptr[i], self.indptr[i + 1]):
                j = self.indices[k]
                if i < j:
                    yield self.vertices[i], self.vertices[j], float(self.weights[k])

    @cached_property
    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(i, j, w) index arrays with i < j, one entry per undirected edge."""
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        keep = rows < self.indices
        return rows[keep], self.indices[keep], self.weights[keep]

    def recomputed_measure(self) -> np.ndarray:
        return np.add.reduceat(self.weights, self.indptr[:-1]) if self.n else np.zeros(0)


def _canon_pair(x, y):
    return (x, y) if x <= y else (y, x)


def build_graph(edges: Iterable[tuple], vertices: Iterable[str] | None = None) -> WeightedGraph:
    """Build a graph from ``(x, y, w)`` triples.

    A pair may appear more than once (in either orientation) only with the
    same weight. ``vertices`` may list extra ids, which then must still have
    a neighbor.
    """
    pairs: dict[tuple[str, str], float] = {}
    names: set[str] = set(vertices or ())
    for x, y, w in edges:
        x, y = str(x), str(y)
        w = float(w)
        if x == y:
            raise SelfLoop(f"self-loop at {x!r}")
        if not (w > 0) or not math.isfinite(w):
            raise NonpositiveWeight(f"weight {w!r} on edge ({x!r}, {y!r})")
        key = _canon_pair(x, y)
        if key in pairs and pairs[key] != w:
            raise AsymmetricInput(f"edge {key} given with weights {pairs[key]!r} and {w!r}")
        pairs[key] = w
        names.update(key)

    verts = tuple(sorted(names))
    index = {v: i for i, v in enumerate(verts)}
    n = len(verts)
    rows: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for (x, y), w in pairs.items():
        i, j = index[x], index[y]
        rows[i].append((j, w))
        rows[j].append((i, w))
    for i, r in enumerate(rows):
        if not r:
            raise IsolatedVertex(f"vertex {verts[i]!r} has no neighbors")
        r.sort()

    indptr = np.zeros(n + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(r) for r in rows])
    indices = np.fromiter((j for r in rows for j, _ in r), dtype=np.int64, count=indptr[-1])
    weights = np.fromiter((w for r in rows for _, w in r), dtype=np.float64, count=indptr[-1])
    # exact left-to-right summation per row, same as recomputed_measure()
    measure = np.add.reduceat(weights, indptr[:-1]) if n else np.zeros(0)
    return WeightedGraph(verts, indptr, indices, weights, measure, index)


def _check_subset(g: WeightedGraph, U) -> frozenset:
    U = frozenset(str(x) for x in U)
    for x in U:
        if x not in g.index:
            raise UnknownVertex(f"unknown vertex {x!r}")
    return U


def boundary_of(g: WeightedGraph, U: Iterable[str]) -> frozenset:
    """Vertices outside ``U`` adjacent to some vertex of ``U``."""
    U = _check_subset(g, U)
    if not U:
        raise EmptyInterior("interior set is empty")
    out = set()
    for x in U:
        out.update(y for y in g.neighbors(x) if y not in U)
    return frozenset(out)


def induced_connected(g: WeightedGraph, U: Iterable[str]) -> bool:
    """True iff the subgraph induced on ``U`` has exactly one component."""
    U = _check_subset(g, U)
    if not U:
        return False
    start = min(U)
    seen = {start}
    queue = deque([start])
    while queue:
        x = queue.popleft()
        for y in g.neighbors(x):
            if y in U and y not in seen:
                seen.add(y)
                queue.append(y)
    return len(seen) == len(U)


@dataclass(frozen=True)
class DirichletDomain:
    """Interior ``U``, its vertex boundary and the boundary values a(x).

    ``interior`` and ``boundary`` are sorted tuples; ``boundary_data`` is
    aligned with ``boundary``.
    """

    interior: tuple[str, ...]
    boundary: tuple[str, ...]
    boundary_data: tuple[float, ...]

    @property
    def m(self) -> int:
        return len(self.interior)

    def boundary_value(self, x: str) -> float:
        return self.boundary_data[self.boundary.index(x)]

    @property
    def homogeneous(self) -> bool:
        return all(a == 0.0 for a in self.boundary_data)


def dirichlet_domain(
    g: WeightedGraph,
    interior: Iterable[str],
    boundary_data: Mapping[str, float] | float | None = None,
    require_connected: bool = True,
) -> DirichletDomain:
    """Build a :class:`DirichletDomain`, computing the boundary from ``g``.

    ``boundary_data`` is a map on the boundary or a constant; default 0.
    """
    U = _check_subset(g, interior)
    bnd = tuple(sorted(boundary_of(g, U)))
    if require_connected and not induced_connected(g, U):
        from .errors import NotConnected

        raise NotConnected(f"induced subgraph on {sorted(U)} is not connected")
    if boundary_data is None:
        data = (0.0,) * len(bnd)
    elif isinstance(boundary_data, (int, float)):
        data = (float(boundary_data),) * len(bnd)
    else:
        from .errors import MissingBoundaryData

        missing = [x for x in bnd if x not in boundary_data]
        if missing:
            raise MissingBoundaryData(f"no boundary value for {missing}")
        data = tuple(float(boundary_data[x]) for x in bnd)
    return DirichletDomain(tuple(sorted(U)), bnd, data)


# generators


def _names(prefix: str, count: int, start: int = 0) -> list[str]:
    width = len(str(start + count - 1))
    return [f"{prefix}{i:0{width}d}" for i in range(start, start + count)]


def generate_graph(kind: str, *args, weight: float = 1.0, max_retries: int = 100) -> WeightedGraph:
    """Generate a fixture graph with uniform edge weight ``weight``.

    ``path(n)`` has vertices ``"0".."n-1"`` (zero padded), ``star(k)`` has
    center ``"x0"`` and leaves ``"y1".."yk"``, ``grid(m, n)`` has vertices
    ``"r<i>c<j>"``, ``random(n, prob, seed)`` is an Erdos-Renyi draw that is
    redrawn with ``seed + 1, seed + 2, ...`` until connected.
    """
    if kind == "path":
        (n,) = args
        if n < 2:
            raise DegenerateSize("path needs at least 2 vertices")
        v = _names("", n)
        return build_graph((v[i], v[i + 1], weight) for i in range(n - 1))
    if kind == "star":
        (k,) = args
        if k < 1:
            raise DegenerateSize("star needs at least 1 leaf")
        return build_graph(("x0", y, weight) for y in _names("y", k, start=1))
    if kind == "grid":
        m, n = args
        if m < 1 or n < 1 or m * n < 2:
            raise DegenerateSize("grid needs at least 2 vertices")
        wi, wj = len(str(m - 1)), len(str(n - 1))
        name = lambda i, j: f"r{i:0{wi}d}c{j:0{wj}d}"  # noqa: E731
        edges = []
        for i in range(m):
            for j in range(n):
                if i + 1 < m:
                    edges.append((name(i, j), name(i + 1, j), weight))
                if j + 1 < n:
                    edges.append((name(i, j), name(i, j + 1), weight))
        return build_graph(edges)
    if kind == "random":
        n, prob, seed = args
        if n < 2:
            raise DegenerateSize("random graph needs at least 2 vertices")
        if not 0 < prob <= 1:
            raise ValueError(f"edge probability {prob!r} not in (0, 1]")
        v = _names("", n)
        iu, ju = np.triu_indices(n, k=1)
        for attempt in range(max_retries):
            rng = np.random.default_rng(seed + attempt)
            keep = rng.random(len(iu)) < prob
            if not keep.any():
                continue
            deg = np.bincount(iu[keep], minlength=n) + np.bincount(ju[keep], minlength=n)
            if (deg == 0).any():
                continue
            g = build_graph((v[i], v[j], weight) for i, j in zip(iu[keep], ju[keep]))
            if induced_connected(g, g.vertices):
                return g
        raise DisconnectedAfterRetries(f"no connected draw in {max_retries} seeds from {seed}")
    raise ValueError(f"unknown graph kind {kind!r}")


# edge-list text format


def parse_edge_list(text: str) -> WeightedGraph:
    """Parse ``<id> <id> <weight>`` lines; ``#`` starts a comment."""
    pairs: dict[tuple[str, str], tuple[float, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise EdgeListParseError(lineno, f"expected 3 fields, got {len(parts)}")
        x, y, ws = parts
        try:
            w = float(ws)
        except ValueError:
            raise EdgeListParseError(lineno, f"bad weight {ws!r}") from None
        if x == y:
            raise EdgeListParseError(lineno, f"self-loop at {x!r}")
        if not (w > 0) or not math.isfinite(w):
            raise EdgeListParseError(lineno, f"non-positive weight {ws}")
        key = _canon_pair(x, y)
        if key in pairs:
            prev, prev_line = pairs[key]
            if prev != w:
                raise EdgeListParseError(
                    lineno, f"edge {key} conflicts with line {prev_line} ({prev!r} vs {w!r})"
                )
            continue
        pairs[key] = (w, lineno)
    return build_graph((x, y, w) for (x, y), (w, _) in pairs.items())


def read_edge_list(path: str | Path) -> WeightedGraph:
    return parse_edge_list(Path(path).read_text(encoding="utf-8"))


def format_edge_list(g: WeightedGraph) -> str:
    return "".join(f"{x} {y} {w!r}\n" for x, y, w in g.edges())
