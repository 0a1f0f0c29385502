import numpy as np
import pytest

from mmsupg.mesh import INTERIOR, TriMesh, generate_uniform


def loose_mesh(vertices, triangles):
    """A TriMesh without boundary information, for single-element geometry."""
    v = np.array(vertices, dtype=float)
    t = np.array(triangles, dtype=np.int64)
    empty = np.zeros((0, 2), dtype=np.int64)
    nv = len(v)
    return TriMesh(v, t, empty, np.zeros(0, dtype=np.int64),
                   np.zeros(nv, dtype=np.int64), np.full(nv, -1, dtype=np.int64))


def perturbed_mesh(n, amount, rng):
    """Uniform mesh with interior vertices jittered by up to ``amount / n``."""
    mesh = generate_uniform(n)
    v = mesh.vertices.copy()
    inner = mesh.vertex_flags == INTERIOR
    v[inner] += rng.uniform(-amount, amount, (int(inner.sum()), 2)) / n
    mesh = mesh.with_vertices(v)
    assert np.all(mesh.areas() > 0), "perturbation inverted an element"
    return mesh


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


# ---------------------------------------------------------------------------
# acceptance report: one PASS/FAIL line per criterion, repeated at the end of
# the session so it is visible in plain `pytest -v` output

ACCEPTANCE = {}


@pytest.fixture
def criterion():
    def record(number, title, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title} -- {detail}"
        ACCEPTANCE[number] = line
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
