"""First Dirichlet eigenpair of -Delta_p and nodal-domain analysis."""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyBoundary,
    NoConvergence,
    NonzeroBoundaryData,
    NotConnected,
    SupportMismatch,
    ZeroDenominator,
)
from .graph import DirichletDomain, WeightedGraph, induced_connected
from .plap import VertexField, check_exponent, stencil

__all__ = [
    "EigenPair",
    "NodalDecomposition",
    "rayleigh_quotient",
    "first_eigenpair",
    "eigen_residual",
    "strong_nodal_domains",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EigenPair:
    """(lambda_1, phi) with phi > 0 on U and max phi = 1."""

    lam: float
    phi: VertexField
    p: float
    residual: float = 0.0
    iterations: int = 0
    normalization: str = "sup-norm-one"

    @property
    def phi_min(self) -> float:
        return float(self.phi.values.min())

    @property
    def phi_sup(self) -> float:
        return float(np.abs(self.phi.values).max())

    def to_json(self) -> dict:
        return {
            "lambda": self.lam,
            "phi": self.phi.as_dict(),
            "p": self.p,
            "residual": self.residual,
            "phi_min": self.phi_min,
            "phi_sup": self.phi_sup,
            "normalization": self.normalization,
        }


@dataclass(frozen=True)
class NodalDecomposition:
    positive_domains: list
    negative_domains: list
    zero_set: frozenset

    @property
    def count(self) -> int:
        return len(self.positive_domains) + len(self.negative_domains)


def _field_on(dom: DirichletDomain, f: VertexField) -> np.ndarray:
    if f.support != dom.interior:
        raise SupportMismatch(f"field support {f.support} differs from interior {dom.interior}")
    return f.values


def _energy(st, f: np.ndarray, p: float) -> float:
    """Half the ordered-pair sum of w|f(y)-f(x)|^p, f = 0 off U."""
    inner = np.sum(st.edge_w * np.abs(f[st.edge_i] - f[st.edge_j]) ** p)
    outer = np.sum(st.bedge_w * np.abs(f[st.bedge_i]) ** p)
    return float(inner + outer)


def _rq(st, f: np.ndarray, p: float) -> float:
    den = float(np.sum(st.mu * np.abs(f) ** p))
    if den == 0.0:
        raise ZeroDenominator("Rayleigh quotient of the zero field")
    return _energy(st, f, p) / den


def rayleigh_quotient(g: WeightedGraph, dom: DirichletDomain, p: float, f: VertexField,
                      linear_ok: bool = False) -> float:
    """R_p(f) for f on U extended by zero outside U.

    Boundary data in ``dom`` is ignored: the quotient lives on boundary-zero
    functions.
    """
    p = check_exponent(p, linear_ok)
    return _rq(stencil(g, dom), _field_on(dom, f), p)


def _residual(st, f: np.ndarray, lam: float, p: float) -> float:
    lap = st.apply(f, p, np.zeros_like(st.boundary_values))
    return float(np.max(np.abs(-lap - lam * np.abs(f) ** (p - 2) * f))) if len(f) else 0.0


def eigen_residual(g: WeightedGraph, dom: DirichletDomain, p: float, pair: EigenPair) -> float:
    """max_U | -Delta_p|_U phi - lambda |phi|^(p-2) phi | with zero boundary."""
    st = stencil(g, dom)
    return _residual(st, _field_on(dom, pair.phi), pair.lam, check_exponent(p, linear_ok=True))


def first_eigenpair(
    g: WeightedGraph,
    dom: DirichletDomain,
    p: float,
    max_iter: int = 50_000,
    tol: float = 1e-8,
    seed: int = 0,
    initial: VertexField | None = None,
    linear_ok: bool = False,
) -> EigenPair:
    """Minimize R_p over positive fields by projected descent.

    Each iteration steps along the residual direction
    ``Delta_p f + R(f) |f|^(p-2) f`` (a rescaled negative gradient), takes
    absolute values, and renormalizes to unit weighted l^p norm. Step sizes
    are Barzilai-Borwein with a nonmonotone Armijo backtracking safeguard.
    Stops when the sup-normalized residual is below ``tol`` and the relative
    change of R over the last iteration is below 1e-10.
    """
    p = check_exponent(p, linear_ok)
    if not dom.boundary:
        raise EmptyBoundary("first Dirichlet eigenpair needs a nonempty boundary")
    if not dom.homogeneous:
        raise NonzeroBoundaryData("eigenproblem requires zero boundary data")
    if not induced_connected(g, dom.interior):
        raise NotConnected(f"induced subgraph on {dom.interior} is not connected")
    st = stencil(g, dom)
    zero_b = np.zeros_like(st.boundary_values)
    mu = st.mu
    m = dom.m

    if initial is None:
        f = np.random.default_rng(seed).uniform(0.5, 1.5, size=m)
    else:
        f = np.abs(_field_on(dom, initial)).astype(float)
        if not f.any():
            raise ZeroDenominator("initial guess is identically zero")

    def normalize(v):
        return v / np.sum(mu * v ** p) ** (1.0 / p)

    def direction(v, r):
        return st.apply(v, p, zero_b) + r * np.abs(v) ** (p - 2) * v

    f = normalize(f)
    R = _rq(st, f, p)
    d = direction(f, R)
    step = 1.0
    history = deque([R], maxlen=10)
    res = np.inf
    rel = np.inf
    for it in range(1, max_iter + 1):
        slope = float(np.sum(mu * d * d))
        ref = max(history)
        t = step
        for _ in range(60):
            cand = normalize(np.abs(f + t * d))
            R_new = _rq(st, cand, p)
            if R_new <= ref - 1e-4 * t * slope:
                break
            t *= 0.5
        else:
            # no decrease possible at machine precision
            cand, R_new = f, R
        d_new = direction(cand, R_new)
        s = cand - f
        y = d - d_new
        sy = float(np.sum(mu * s * y))
        step = float(np.sum(mu * s * s)) / sy if sy > 0 else 2.0 * t
        step = min(max(step, 1e-12), 1e12)
        rel = abs(R_new - R) / max(R_new, 1e-300)
        f, R, d = cand, R_new, d_new
        history.append(R)
        top = f.max()
        res = float(np.max(np.abs(d))) / top ** (p - 1)
        if res <= tol and rel <= 1e-10:
            break
    else:
        raise NoConvergence(f"no convergence in {max_iter} iterations", residual=res)

    phi = f / f.max()
    if phi.min() <= 1e-12:
        raise NoConvergence("iterate lost strict positivity", residual=res)
    lam = _rq(st, phi, p)
    res = _residual(st, phi, lam, p)
    if res > tol:
        raise NoConvergence("residual above tolerance after normalization", residual=res)
    log.debug("first_eigenpair: %d iterations, lambda=%.15g, residual=%.3e", it, lam, res)
    return EigenPair(lam, VertexField(dom.interior, phi), p, res, it)


def strong_nodal_domains(g: WeightedGraph, dom: DirichletDomain, f: VertexField) -> NodalDecomposition:
    """Components of {f > 0} and {f < 0} inside the subgraph induced on U."""
    vals = dict(zip(dom.interior, _field_on(dom, f)))

    def components(keep):
        todo = sorted(x for x in dom.interior if keep(vals[x]))
        seen, out = set(), []
        for s in todo:
            if s in seen:
                continue
            comp, queue = {s}, deque([s])
            seen.add(s)
            while queue:
                x = queue.popleft()
                for y in g.neighbors(x):
                    if y in vals and y not in seen and keep(vals[y]):
                        seen.add(y)
                        comp.add(y)
                        queue.append(y)
            out.append(frozenset(comp))
        return out

    return NodalDecomposition(
        positive_domains=components(lambda v: v > 0),
        negative_domains=components(lambda v: v < 0),
        zero_set=frozenset(x for x, v in vals.items() if v == 0),
    )
