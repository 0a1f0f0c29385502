import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmsupg import norms, problems
from mmsupg.mesh import generate_uniform

from conftest import perturbed_mesh

ZERO_GRAD = lambda x, y, t: (np.zeros(np.shape(x)), np.zeros(np.shape(x)))  # noqa: E731


def grad_of(cx, cy):
    return lambda x, y, t: (np.full(np.shape(x), cx), np.full(np.shape(x), cy))


def test_quadrature_rule_degree_four():
    assert norms.QUAD6_WEIGHTS.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.allclose(norms.QUAD6_BARY.sum(axis=1), 1.0)
    # integrals of monomials over the unit right triangle: a! b! / (a + b + 2)!
    xy = norms.QUAD6_BARY[:, 1:]
    for a in range(5):
        for b in range(5 - a):
            q = 0.5 * (norms.QUAD6_WEIGHTS * xy[:, 0] ** a * xy[:, 1] ** b).sum()
            want = math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)
            assert q == pytest.approx(want, rel=1e-12)


@pytest.fixture
def mesh(rng):
    return perturbed_mesh(6, 0.2, rng)


def test_h1_error_examples(mesh):
    x, y = mesh.vertices.T
    assert norms.h1_seminorm_error(mesh, x + 2 * y, grad_of(1, 2), 0.0) < 1e-12
    zero = np.zeros(mesh.n_vertices)
    assert norms.h1_seminorm_error(mesh, zero, grad_of(1, 0), 0.0) == pytest.approx(1.0, rel=1e-12)
    assert norms.h1_seminorm_error(mesh, zero, grad_of(1, 2), 0.0) == pytest.approx(math.sqrt(5), rel=1e-12)


def test_h1_seminorm_examples(mesh):
    x, y = mesh.vertices.T
    assert norms.h1_seminorm(mesh, x) == pytest.approx(1.0, rel=1e-12)
    assert norms.h1_seminorm(mesh, np.full(mesh.n_vertices, 3.7)) < 1e-12
    assert norms.h1_seminorm(mesh, x + 2 * y) == pytest.approx(math.sqrt(5), rel=1e-12)


def test_l2_error_examples(mesh):
    x, y = mesh.vertices.T
    lin = lambda x, y, t: 0.5 * x - y + 2  # noqa: E731
    assert norms.l2_error(mesh, lin(x, y, 0), lin, 0.0) < 1e-12
    zero = lambda x, y, t: np.zeros(np.shape(x))  # noqa: E731
    assert norms.l2_error(mesh, np.ones(mesh.n_vertices), zero, 0.0) == pytest.approx(1.0, rel=1e-12)
    assert norms.l2_error(mesh, np.zeros(mesh.n_vertices), lambda x, y, t: x, 0.0) == \
        pytest.approx(1 / math.sqrt(3), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-10, 10))
def test_error_with_zero_gradient_is_seminorm(seed, shift):
    rng = np.random.default_rng(seed)
    mesh = perturbed_mesh(5, 0.2, rng)
    u = rng.standard_normal(mesh.n_vertices)
    a = norms.h1_seminorm_error(mesh, u, ZERO_GRAD, 0.0)
    b = norms.h1_seminorm(mesh, u)
    assert abs(a - b) <= 1e-12 * max(1.0, b)
    # constant shifts change nothing
    assert abs(norms.h1_seminorm(mesh, u + shift) - b) <= 1e-12 * max(1.0, b)
    assert abs(norms.h1_seminorm_error(mesh, u + shift, ZERO_GRAD, 0.0) - a) <= 1e-12 * max(1.0, a)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_triangle_inequality(seed):
    rng = np.random.default_rng(seed)
    mesh = generate_uniform(6)
    p = problems.example1(c=10.0)
    u, v = rng.standard_normal((2, mesh.n_vertices))
    eu = norms.h1_seminorm_error(mesh, u, p.exact_grad, 0.2)
    ev = norms.h1_seminorm_error(mesh, v, p.exact_grad, 0.2)
    assert abs(eu - ev) <= norms.h1_seminorm(mesh, u - v) * (1 + 1e-12)


def test_report():
    mesh = generate_uniform(4)
    p = problems.linear_steady()
    r = norms.report(mesh, mesh.vertices.sum(axis=1), p, 0.0)
    assert r.against_exact and r.h1_semi < 1e-12 and r.n_elements == 32
    r2 = norms.report(mesh, mesh.vertices[:, 0], problems.example2(), 0.5)
    assert not r2.against_exact and r2.h1_semi == pytest.approx(1.0)
    assert r2.l2 == pytest.approx(1 / math.sqrt(3))
