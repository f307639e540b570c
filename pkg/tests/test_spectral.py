import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from plaplab import (
    EigenPair,
    EmptyBoundary,
    NoConvergence,
    NonzeroBoundaryData,
    NotConnected,
    VertexField,
    ZeroDenominator,
    build_graph,
    dirichlet_domain,
    eigen_residual,
    first_eigenpair,
    generate_graph,
    rayleigh_quotient,
    strong_nodal_domains,
)

from ._util import random_domain, random_graph, seeds

P_VALUES = (2.5, 3.0, 4.0)


def linear_oracle(g, dom):
    """Smallest Dirichlet eigenvalue of -Delta (p = 2) by a dense symmetric solve."""
    idx = [g.idx(x) for x in dom.interior]
    W = np.zeros((g.n, g.n))
    for x, y, w in g.edges():
        W[g.idx(x), g.idx(y)] = W[g.idx(y), g.idx(x)] = w
    D = np.diag(g.measure[idx])
    return scipy.linalg.eigh(D - W[np.ix_(idx, idx)], D, eigvals_only=True)[0]


def test_rayleigh_examples(single, path4):
    g, dom = single
    assert rayleigh_quotient(g, dom, 3, VertexField(dom.interior, [1.0])) == 1.0
    g, dom = path4
    for p in P_VALUES:
        for s in (0.1, 1.0, 7.0):
            f = VertexField.constant(dom.interior, s)
            assert rayleigh_quotient(g, dom, p, f) == pytest.approx(0.5, rel=1e-14)
    with pytest.raises(ZeroDenominator):
        rayleigh_quotient(g, dom, 3, VertexField.constant(dom.interior, 0.0))


def test_rayleigh_ignores_boundary_data():
    g = generate_graph("path", 4)
    dom = dirichlet_domain(g, ["1", "2"], boundary_data=5.0)
    assert rayleigh_quotient(g, dom, 3, VertexField.constant(dom.interior, 1.0)) == 0.5


@pytest.mark.parametrize("p", P_VALUES)
def test_single_vertex_eigenpair(single, p):
    g, dom = single
    pair = first_eigenpair(g, dom, p)
    assert pair.lam == pytest.approx(1.0, abs=1e-12)
    assert pair.phi["0"] == 1.0
    assert eigen_residual(g, dom, p, pair) <= 1e-10


@pytest.mark.parametrize("p", P_VALUES)
def test_path4_eigenpair(path4, p):
    g, dom = path4
    pair = first_eigenpair(g, dom, p)
    assert pair.lam == pytest.approx(0.5, abs=1e-6)
    assert pair.phi_sup == 1.0
    # the minimum is flat to order p in phi(1) - phi(2), so phi needs a much
    # smaller residual than lambda does
    pair = first_eigenpair(g, dom, p, tol=1e-13)
    assert np.allclose(pair.phi.values, 1.0, atol=1e-4)


@pytest.mark.parametrize("p", P_VALUES)
def test_path4_brute_force_minimum(p):
    # R_p(s, t) = (s^p + |t - s|^p + t^p) / (2 s^p + 2 t^p) on path(4), interior {1, 2}
    s, t = np.meshgrid(np.linspace(0.01, 1, 400), np.linspace(0.01, 1, 400))
    R = (s ** p + np.abs(t - s) ** p + t ** p) / (2 * s ** p + 2 * t ** p)
    assert R.min() == pytest.approx(0.5, abs=1e-12)
    g = generate_graph("path", 4)
    assert first_eigenpair(g, dirichlet_domain(g, ["1", "2"]), p).lam == pytest.approx(R.min(), abs=1e-6)


def test_residual_examples(single):
    g, dom = single
    exact = EigenPair(1.0, VertexField(dom.interior, [1.0]), 3.0)
    assert eigen_residual(g, dom, 3, exact) == 0.0
    off = EigenPair(1.0 + 1e-3, VertexField(dom.interior, [1.0]), 3.0)
    assert eigen_residual(g, dom, 3, off) == pytest.approx(1e-3)
    # on one vertex every positive multiple of phi is an eigenfunction
    scaled = EigenPair(1.0, VertexField(dom.interior, [1.0 + 1e-3]), 3.0)
    assert eigen_residual(g, dom, 3, scaled) == 0.0


def test_preconditions():
    k3 = build_graph([("a", "b", 1), ("b", "c", 1), ("a", "c", 1)])
    with pytest.raises(EmptyBoundary):
        first_eigenpair(k3, dirichlet_domain(k3, ["a", "b", "c"]), 3)
    g = generate_graph("path", 5)
    with pytest.raises(NonzeroBoundaryData):
        first_eigenpair(g, dirichlet_domain(g, ["1", "2"], 1.0), 3)
    with pytest.raises(NotConnected):
        first_eigenpair(g, dirichlet_domain(g, ["1", "3"], require_connected=False), 3)
    with pytest.raises(NoConvergence) as e:
        first_eigenpair(g, dirichlet_domain(g, ["1", "2", "3"]), 3, max_iter=1)
    assert e.value.residual > 0


def test_to_json_fields(path4):
    g, dom = path4
    d = first_eigenpair(g, dom, 3).to_json()
    assert {"lambda", "phi", "p", "residual"} <= set(d)
    assert set(d["phi"]) == {"1", "2"}


def test_nodal_examples():
    g = generate_graph("path", 6)
    dom = dirichlet_domain(g, ["1", "2", "3", "4"])
    nd = strong_nodal_domains(g, dom, VertexField(dom.interior, [1, -1, 1, -1]))
    assert len(nd.positive_domains) == 2 and len(nd.negative_domains) == 2
    assert nd.positive_domains == [frozenset({"1"}), frozenset({"3"})]
    nd = strong_nodal_domains(g, dom, VertexField.constant(dom.interior, 0.3))
    assert nd.count == 1 and nd.positive_domains[0] == set(dom.interior)
    nd = strong_nodal_domains(g, dom, VertexField.constant(dom.interior, 0.0))
    assert nd.count == 0 and nd.zero_set == set(dom.interior)


@given(seeds)
def test_nodal_domains_partition(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng)
    dom = random_domain(rng, g)
    f = rng.integers(-1, 2, size=dom.m).astype(float)
    nd = strong_nodal_domains(g, dom, VertexField(dom.interior, f))
    parts = nd.positive_domains + nd.negative_domains + [nd.zero_set]
    assert sum(len(s) for s in parts) == dom.m
    assert set().union(*parts) == set(dom.interior)


@given(seeds, st.floats(min_value=2.1, max_value=5.0))
def test_absolute_value_never_raises_quotient(seed, p):
    rng = np.random.default_rng(seed)
    g = random_graph(rng)
    dom = random_domain(rng, g)
    f = rng.normal(size=dom.m)
    a = rayleigh_quotient(g, dom, p, VertexField(dom.interior, np.abs(f)))
    b = rayleigh_quotient(g, dom, p, VertexField(dom.interior, f))
    assert a <= b * (1 + 1e-12)


@given(seeds, st.floats(min_value=1e-3, max_value=1e3))
def test_quotient_zero_homogeneous(seed, c):
    rng = np.random.default_rng(seed)
    g = random_graph(rng)
    dom = random_domain(rng, g)
    f = rng.normal(size=dom.m)
    a = rayleigh_quotient(g, dom, 3.3, VertexField(dom.interior, f))
    b = rayleigh_quotient(g, dom, 3.3, VertexField(dom.interior, c * f))
    assert a == pytest.approx(b, rel=1e-12)


@settings(max_examples=20)
@given(seeds, st.sampled_from(P_VALUES))
def test_converged_pair_properties(seed, p):
    rng = np.random.default_rng(seed)
    g = random_graph(rng)
    dom = random_domain(rng, g)
    pair = first_eigenpair(g, dom, p, seed=seed % 1000)
    assert pair.lam > 1e-12
    assert pair.phi_sup == 1.0 and pair.phi_min > 0
    assert eigen_residual(g, dom, p, pair) <= 1e-8
    nd = strong_nodal_domains(g, dom, pair.phi)
    assert nd.count == 1 and not nd.zero_set and not nd.negative_domains
    # nothing on the positive cone beats it
    for _ in range(5):
        f = VertexField(dom.interior, rng.uniform(0.01, 1, size=dom.m))
        assert rayleigh_quotient(g, dom, p, f) >= pair.lam * (1 - 1e-9)


@settings(max_examples=10)
@given(seeds)
def test_independent_of_seed_and_scale(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng)
    dom = random_domain(rng, g)
    a = first_eigenpair(g, dom, 3.0, seed=1)
    b = first_eigenpair(g, dom, 3.0, seed=2)
    f0 = VertexField(dom.interior, rng.uniform(0.5, 1.5, size=dom.m))
    c = first_eigenpair(g, dom, 3.0, initial=f0)
    d = first_eigenpair(g, dom, 3.0, initial=VertexField(dom.interior, 2 * f0.values))
    assert a.lam == pytest.approx(b.lam, rel=1e-7)
    assert c.lam == pytest.approx(d.lam, rel=1e-7) and c.lam == pytest.approx(a.lam, rel=1e-7)


@settings(max_examples=20)
@given(seeds)
def test_linear_case_matches_dense_solve(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng)
    dom = random_domain(rng, g)
    pair = first_eigenpair(g, dom, 2.0, linear_ok=True)
    assert pair.lam == pytest.approx(linear_oracle(g, dom), abs=1e-6)


@pytest.mark.parametrize("p", P_VALUES)
def test_domain_monotonicity_on_nested_paths(p):
    g = generate_graph("path", 10)
    lams = []
    for k in range(1, 9):
        dom = dirichlet_domain(g, g.vertices[1:1 + k])
        lams.append(first_eigenpair(g, dom, p).lam)
    assert all(a >= b * (1 - 1e-9) for a, b in zip(lams, lams[1:]))
