"""Random graph/domain generators shared by the tests."""
import numpy as np
from hypothesis import strategies as st

from plaplab import build_graph, dirichlet_domain


def random_graph(rng, n=None, weighted=True):
    """Connected graph on n vertices: random spanning tree plus extra edges."""
    n = int(rng.integers(3, 11)) if n is None else n
    names = [f"v{i:02d}" for i in range(n)]
    order = rng.permutation(n)
    edges = {}
    for k in range(1, n):
        a, b = order[k], order[int(rng.integers(0, k))]
        edges[tuple(sorted((a, b)))] = None
    for _ in range(int(rng.integers(0, n))):
        a, b = rng.choice(n, size=2, replace=False)
        edges[tuple(sorted((a, b)))] = None
    w = (lambda: float(rng.uniform(0.2, 3.0))) if weighted else (lambda: 1.0)
    return build_graph((names[a], names[b], w()) for a, b in edges)


def random_domain(rng, g, min_boundary=1):
    """Connected proper subset U grown by BFS from a random vertex."""
    verts = list(g.vertices)
    size = int(rng.integers(1, len(verts) - min_boundary + 1))
    start = verts[int(rng.integers(len(verts)))]
    U, frontier = {start}, [start]
    while frontier and len(U) < size:
        x = frontier.pop(int(rng.integers(len(frontier))))
        for y in g.neighbors(x):
            if y not in U and len(U) < size:
                U.add(y)
                frontier.append(y)
    return dirichlet_domain(g, U)


seeds = st.integers(min_value=0, max_value=2**32 - 1)
