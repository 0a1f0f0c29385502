import os
import subprocess
import sys

import numpy as np
import pytest

from mmsupg import _kernels_py, kernels
from mmsupg.mesh import INTERIOR, generate_uniform
from mmsupg.metric import REF_EDGES

from conftest import perturbed_mesh

try:
    from mmsupg import _kernels as compiled
except ImportError:  # pragma: no cover - extension not built
    compiled = None

needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled extension not built")


def energy_inputs(rng, n=6):
    mesh = perturbed_mesh(n, 0.2, rng)
    a = rng.uniform(-1, 1, (mesh.n_elements, 2, 2))
    m = np.einsum("kij,klj->kil", a, a) + 0.5 * np.eye(2)
    det = m[:, 0, 0] * m[:, 1, 1] - m[:, 0, 1] ** 2
    tm = np.ascontiguousarray(np.column_stack([m[:, 1, 1], -m[:, 0, 1], m[:, 0, 0]]) / det[:, None])
    return mesh, tm, np.sqrt(det)


def test_backend_reported():
    assert kernels.BACKEND in ("python", "cython")
    if compiled is not None and os.environ.get("MMSUPG_PURE_PYTHON") is None:
        assert kernels.BACKEND == "cython"


@needs_compiled
@pytest.mark.parametrize("p", [1.5, 2.0, 1.2])
def test_energy_backends_agree(rng, p):
    mesh, tm, sd = energy_inputs(rng)
    args = (mesh.vertices, mesh.triangles, tm, sd, REF_EDGES, 1 / 3, p)
    e_py, a_py, g_py = _kernels_py.mesh_energy(*args, True)
    e_cy, a_cy, g_cy = compiled.mesh_energy(*args, True)
    assert e_cy == pytest.approx(e_py, rel=1e-12)
    assert a_cy == pytest.approx(a_py, rel=1e-14)
    assert np.allclose(g_cy, g_py, rtol=1e-11, atol=1e-11 * np.abs(g_py).max())
    e2, _, g2 = compiled.mesh_energy(*args, False)
    assert e2 == e_cy and g2 is None


@needs_compiled
def test_energy_backends_agree_on_inverted_mesh():
    mesh = generate_uniform(3)
    v = mesh.vertices.copy()
    inner = np.flatnonzero(mesh.vertex_flags == INTERIOR)[0]
    v[inner] += 0.6
    tm = np.tile([1.0, 0.0, 1.0], (mesh.n_elements, 1))
    sd = np.ones(mesh.n_elements)
    for impl in (_kernels_py, compiled):
        e, amin, g = impl.mesh_energy(v, mesh.triangles, tm, sd, REF_EDGES, 1 / 3, 1.5, True)
        assert e == np.inf and amin < 0 and g is None


@needs_compiled
def test_locate_backends_agree(rng):
    mesh = perturbed_mesh(7, 0.2, rng)
    pts = np.ascontiguousarray(rng.uniform(0, 1, (300, 2)))
    pts[:3] = [[1.2, 0.5], [0.0, 0.0], [1.0, 1.0]]
    seeds = rng.integers(0, mesh.n_elements, len(pts)).astype(np.int64)
    nb = np.ascontiguousarray(mesh.element_neighbors())
    a = _kernels_py.locate(pts, mesh.vertices, mesh.triangles, nb, seeds)
    b = compiled.locate(pts, mesh.vertices, mesh.triangles, nb, seeds)
    assert np.array_equal(a[2], b[2])
    assert np.array_equal(a[0][a[2]], b[0][b[2]])
    assert np.allclose(a[1][a[2]], b[1][b[2]], atol=1e-13)
    assert not a[2][0]


def test_pure_python_fallback_selected_by_environment():
    env = dict(os.environ, MMSUPG_PURE_PYTHON="1")
    code = ("import mmsupg, mmsupg.kernels as k, mmsupg._kernels_py as p;"
            "print(mmsupg.BACKEND, k.mesh_energy is p.mesh_energy)")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                         text=True, check=True).stdout.split()
    assert out == ["python", "True"]


def test_solution_identical_across_backends():
    code = ("import numpy as np, mmsupg;"
            "from mmsupg import problems, RunConfig, run_simulation;"
            "r = run_simulation(problems.example1(), RunConfig(method='MM-SUPG', n=6, dt=0.01, T=0.03));"
            "print(mmsupg.BACKEND, repr(float(np.abs(r.final.u).sum())))")
    results = {}
    for flag in ("1", "0"):
        env = dict(os.environ, MMSUPG_PURE_PYTHON=flag)
        backend, val = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                                      text=True, check=True).stdout.split()
        results[backend] = float(val)
    vals = list(results.values())
    assert vals[0] == pytest.approx(vals[-1], rel=1e-9)
