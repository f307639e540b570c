"""The graph p-Laplacian and its Dirichlet restriction."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

from . import _kernels
from .errors import (
    InvalidExponent,
    MissingBoundaryData,
    MissingNeighborValue,
    SupportMismatch,
)
from .graph import DirichletDomain, WeightedGraph

__all__ = [
    "VertexField",
    "check_exponent",
    "z_power",
    "p_laplacian",
    "p_laplacian_dirichlet",
    "DirichletStencil",
    "stencil",
]


def check_exponent(p: float, linear_ok: bool = False) -> float:
    """Validate ``p > 2``; ``p == 2`` only passes with ``linear_ok``."""
    p = float(p)
    if p > 2 and math.isfinite(p):
        return p
    if linear_ok and p == 2.0:
        return p
    raise InvalidExponent(f"p must be > 2, got {p!r}")


def z_power(s, p: float):
    """|s|^(p-2) s, elementwise."""
    s = np.asarray(s, dtype=float)
    out = np.abs(s) ** (p - 2.0) * s
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class VertexField:
    """Real values on a finite vertex set, stored in canonical vertex order."""

    support: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        support = tuple(str(x) for x in self.support)
        values = np.array(self.values, dtype=float).reshape(-1)
        if len(support) != len(values):
            raise SupportMismatch(f"{len(support)} vertices but {len(values)} values")
        if len(set(support)) != len(support):
            raise SupportMismatch("duplicate vertex in support")
        if not np.all(np.isfinite(values)):
            raise ValueError("vertex field values must be finite")
        order = sorted(range(len(support)), key=support.__getitem__)
        if order != list(range(len(support))):
            support = tuple(support[i] for i in order)
            values = values[order]
        values.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_mapping(cls, values: Mapping[str, float]) -> "VertexField":
        return cls(tuple(values), [values[k] for k in values])

    @classmethod
    def constant(cls, support: Iterable[str], c: float) -> "VertexField":
        support = tuple(support)
        return cls(support, np.full(len(support), float(c)))

    def __getitem__(self, x: str) -> float:
        try:
            return float(self.values[self.support.index(x)])
        except ValueError:
            raise KeyError(x) from None

    def __len__(self):
        return len(self.support)

    def as_dict(self) -> dict[str, float]:
        return {x: float(v) for x, v in zip(self.support, self.values)}

    def restrict(self, vertices: Iterable[str]) -> "VertexField":
        d = self.as_dict()
        vertices = tuple(vertices)
        missing = [x for x in vertices if x not in d]
        if missing:
            raise SupportMismatch(f"field undefined at {missing}")
        return VertexField(vertices, [d[x] for x in vertices])

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if len(self.values) else 0.0


def p_laplacian(
    g: WeightedGraph,
    p: float,
    f: VertexField,
    at: Iterable[str] | None = None,
    linear_ok: bool = False,
) -> VertexField:
    """Delta_p f at the vertices ``at`` (default: the whole support of ``f``).

    Every neighbor of an evaluated vertex must carry a value.
    """
    p = check_exponent(p, linear_ok)
    at = f.support if at is None else tuple(sorted(at))
    pos = {x: i for i, x in enumerate(f.support)}
    rows = [g.idx(x) for x in at]
    for x, i in zip(at, rows):
        if x not in pos:
            raise MissingNeighborValue(f"no value at evaluated vertex {x!r}")
        for j in g.indices[g.indptr[i]:g.indptr[i + 1]]:
            if g.vertices[j] not in pos:
                raise MissingNeighborValue(f"no value at {g.vertices[j]!r}, neighbor of {x!r}")
    if len(at) == g.n and f.support == g.vertices:
        out = _kernels.plap_rows(g.indptr, g.indices, g.weights, g.measure, f.values, f.values, p)
        return VertexField(at, out)
    # general subset: remap columns onto positions in f
    sub_ptr = np.zeros(len(rows) + 1, dtype=np.int64)
    sub_ptr[1:] = np.cumsum([g.indptr[i + 1] - g.indptr[i] for i in rows])
    sl = [slice(g.indptr[i], g.indptr[i + 1]) for i in rows]
    cols = np.array([pos[g.vertices[j]] for s in sl for j in g.indices[s]], dtype=np.int64)
    w = np.concatenate([g.weights[s] for s in sl]) if sl else np.zeros(0)
    f_row = np.array([f.values[pos[x]] for x in at])
    out = _kernels.plap_rows(sub_ptr, cols, w, g.measure[rows], f.values, f_row, p)
    return VertexField(at, out)


@dataclass(frozen=True, eq=False)
class DirichletStencil:
    """Index arrays for evaluating Delta_p|_U on a fixed domain.

    Columns address the extended vector ``[f on U, a on boundary]``.
    ``edge_i/edge_j/edge_w`` list interior edges once, ``bedge_i/bedge_b/bedge_w``
    list interior-boundary edges (``bedge_b`` indexes the boundary tuple).
    """

    indptr: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    mu: np.ndarray
    boundary_values: np.ndarray
    edge_i: np.ndarray
    edge_j: np.ndarray
    edge_w: np.ndarray
    bedge_i: np.ndarray
    bedge_b: np.ndarray
    bedge_w: np.ndarray

    def apply(self, f: np.ndarray, p: float, boundary_values: np.ndarray | None = None) -> np.ndarray:
        a = self.boundary_values if boundary_values is None else boundary_values
        f_ext = np.concatenate((f, a))
        return _kernels.plap_rows(self.indptr, self.cols, self.weights, self.mu, f_ext, f, p)

    def apply_batch(self, F: np.ndarray, p: float) -> np.ndarray:
        """Apply to every row of ``F`` (shape ``(nt, m)``)."""
        A = np.broadcast_to(self.boundary_values, (F.shape[0], len(self.boundary_values)))
        F_ext = np.ascontiguousarray(np.concatenate((F, A), axis=1))
        return _kernels.plap_rows_batch(
            self.indptr, self.cols, self.weights, self.mu, F_ext, np.ascontiguousarray(F), p
        )


@lru_cache(maxsize=256)
def stencil(g: WeightedGraph, dom: DirichletDomain) -> DirichletStencil:
    m = dom.m
    ext = {x: i for i, x in enumerate(dom.interior)}
    ext.update({x: m + k for k, x in enumerate(dom.boundary)})
    indptr = [0]
    cols, ws = [], []
    ei, ej, ew, bi, bb, bw = [], [], [], [], [], []
    for i, x in enumerate(dom.interior):
        gi = g.idx(x)
        for k in range(g.indptr[gi], g.indptr[gi + 1]):
            y = g.vertices[g.indices[k]]
            if y not in ext:
                raise MissingBoundaryData(f"neighbor {y!r} of {x!r} is neither interior nor boundary")
            c = ext[y]
            cols.append(c)
            ws.append(g.weights[k])
            if c >= m:
                bi.append(i)
                bb.append(c - m)
                bw.append(g.weights[k])
            elif i < c:
                ei.append(i)
                ej.append(c)
                ew.append(g.weights[k])
        indptr.append(len(cols))
    i64 = lambda a: np.asarray(a, dtype=np.int64)  # noqa: E731
    f64 = lambda a: np.asarray(a, dtype=np.float64)  # noqa: E731
    return DirichletStencil(
        indptr=i64(indptr),
        cols=i64(cols),
        weights=f64(ws),
        mu=g.measure[[g.idx(x) for x in dom.interior]].astype(np.float64),
        boundary_values=f64(dom.boundary_data),
        edge_i=i64(ei),
        edge_j=i64(ej),
        edge_w=f64(ew),
        bedge_i=i64(bi),
        bedge_b=i64(bb),
        bedge_w=f64(bw),
    )


def p_laplacian_dirichlet(
    g: WeightedGraph,
    p: float,
    dom: DirichletDomain,
    f: VertexField,
    linear_ok: bool = False,
) -> VertexField:
    """Delta_p|_U f, reading neighbor values on the boundary from ``dom``."""
    p = check_exponent(p, linear_ok)
    if f.support != dom.interior:
        raise SupportMismatch(f"field support {f.support} differs from interior {dom.interior}")
    if len(dom.boundary_data) != len(dom.boundary):
        raise MissingBoundaryData("boundary data does not cover the boundary")
    return VertexField(dom.interior, stencil(g, dom).apply(f.values, p))
