import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from plaplab import (
    InvalidExponent,
    MissingNeighborValue,
    SupportMismatch,
    VertexField,
    build_graph,
    check_exponent,
    dirichlet_domain,
    generate_graph,
    p_laplacian,
    p_laplacian_dirichlet,
    z_power,
)

from ._util import random_domain, random_graph, seeds

exponents = st.floats(min_value=2.05, max_value=6.0)


def full_field(g, values):
    return VertexField(g.vertices, values)


def test_z_power_examples():
    assert z_power(0.0, 3) == 0.0
    assert z_power(-2.0, 3) == -4.0
    x = np.random.default_rng(0).normal(size=100) * 5
    assert np.array_equal(z_power(-x, 3.7), -z_power(x, 3.7))


def test_exponent_gate():
    assert check_exponent(3) == 3.0
    for bad in (2.0, 1.5, float("inf"), float("nan")):
        with pytest.raises(InvalidExponent):
            check_exponent(bad)
    assert check_exponent(2.0, linear_ok=True) == 2.0


def test_constant_field_is_harmonic():
    g = random_graph(np.random.default_rng(1))
    out = p_laplacian(g, 3.0, VertexField.constant(g.vertices, 2.5))
    assert np.all(out.values == 0)


def test_star_center():
    g = generate_graph("star", 3)
    f = full_field(g, [2.0, 0.0, 0.0, 0.0])  # x0 first in sorted order
    assert p_laplacian(g, 3, f)["x0"] == pytest.approx(-4.0, abs=1e-15)


def test_p2_path_oracle():
    g = build_graph([("a", "b", 1), ("b", "c", 1)])
    f = full_field(g, [0.0, 1.0, 0.0])
    assert p_laplacian(g, 2, f, linear_ok=True)["b"] == -1.0
    with pytest.raises(InvalidExponent):
        p_laplacian(g, 2, f)


def test_subset_evaluation_and_missing_neighbor():
    g = build_graph([("a", "b", 1), ("b", "c", 2)])
    f = VertexField(("a", "b"), [1.0, 0.0])
    assert p_laplacian(g, 3, f, at=["a"])["a"] == -1.0
    with pytest.raises(MissingNeighborValue):
        p_laplacian(g, 3, f, at=["b"])


def test_dirichlet_single_vertex(single):
    g, dom = single
    for u in (0.3, 1.0, -2.0):
        out = p_laplacian_dirichlet(g, 3.5, dom, VertexField(dom.interior, [u]))
        assert out["0"] == pytest.approx(-abs(u) ** 1.5 * u, rel=1e-15)


def test_dirichlet_constant_extension_vanishes():
    g = generate_graph("path", 5)
    dom = dirichlet_domain(g, ["1", "2", "3"], boundary_data=1.7)
    out = p_laplacian_dirichlet(g, 3, dom, VertexField.constant(dom.interior, 1.7))
    assert np.all(out.values == 0)


def test_dirichlet_path4(path4):
    g, dom = path4
    for s in (0.5, 1.0, 3.0):
        out = p_laplacian_dirichlet(g, 3, dom, VertexField.constant(dom.interior, s))
        assert np.allclose(out.values, -s * s / 2, rtol=1e-15)


def test_dirichlet_support_checked(path4):
    g, dom = path4
    with pytest.raises(SupportMismatch):
        p_laplacian_dirichlet(g, 3, dom, VertexField(("1",), [1.0]))


def test_vertex_field_contract():
    f = VertexField(("b", "a"), [2.0, 1.0])
    assert f.support == ("a", "b") and f["b"] == 2.0
    with pytest.raises(ValueError):
        VertexField(("a",), [np.nan])
    with pytest.raises(SupportMismatch):
        VertexField(("a", "a"), [1.0, 2.0])
    with pytest.raises(SupportMismatch):
        VertexField(("a",), [1.0, 2.0])


@given(seeds, exponents)
def test_divergence_identity(seed, p):
    rng = np.random.default_rng(seed)
    g = random_graph(rng)
    f = rng.normal(size=g.n) * 3
    lap = p_laplacian(g, p, full_field(g, f)).values
    scale = np.sum(g.measure * np.abs(lap)) + 1.0
    assert abs(np.sum(g.measure * lap)) <= 1e-10 * scale


@given(seeds)
def test_p2_matches_normalized_laplacian(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng)
    W = np.zeros((g.n, g.n))
    for x, y, w in g.edges():
        W[g.idx(x), g.idx(y)] = W[g.idx(y), g.idx(x)] = w
    L = W / g.measure[:, None] - np.eye(g.n)
    f = rng.normal(size=g.n)
    out = p_laplacian(g, 2, full_field(g, f), linear_ok=True).values
    assert np.allclose(out, L @ f, rtol=0, atol=1e-12 * (1 + np.abs(f).max()))


@given(seeds, exponents, st.floats(min_value=0.01, max_value=100))
def test_homogeneity(seed, p, c):
    rng = np.random.default_rng(seed)
    g = random_graph(rng)
    f = rng.normal(size=g.n)
    a = p_laplacian(g, p, full_field(g, c * f)).values
    b = c ** (p - 1) * p_laplacian(g, p, full_field(g, f)).values
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12 * np.abs(b).max())


@given(seeds, exponents)
def test_monotone_at_minimum_of_difference(seed, p):
    rng = np.random.default_rng(seed)
    g = random_graph(rng)
    dom = random_domain(rng, g)
    v = rng.normal(size=dom.m)
    w = rng.normal(size=dom.m)
    w = w - w.max() - 0.1  # negative on U, zero on the boundary
    x0 = int(np.argmin(w))
    Lu = p_laplacian_dirichlet(g, p, dom, VertexField(dom.interior, v + w)).values
    Lv = p_laplacian_dirichlet(g, p, dom, VertexField(dom.interior, v)).values
    assert Lu[x0] - Lv[x0] >= -1e-12 * (1 + abs(Lu[x0]) + abs(Lv[x0]))


@given(seeds, exponents)
def test_dirichlet_agrees_with_full_operator(seed, p):
    rng = np.random.default_rng(seed)
    g = random_graph(rng)
    dom = random_domain(rng, g)
    a = {x: float(rng.normal()) for x in dom.boundary}
    dom = dirichlet_domain(g, dom.interior, a)
    f = rng.normal(size=dom.m)
    ext = dict(zip(dom.interior, f)) | a
    full = p_laplacian(g, p, VertexField.from_mapping(ext), at=dom.interior).values
    restricted = p_laplacian_dirichlet(g, p, dom, VertexField(dom.interior, f)).values
    assert np.allclose(full, restricted, rtol=1e-13, atol=1e-14)
