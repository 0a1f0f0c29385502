"""Fast self-checks used by ``mmsupg validate``.

Each check returns ``(name, passed, detail)``. They are small versions of
the oracle tests in the test suite, cheap enough to run after installation.
"""
from __future__ import annotations

import numpy as np

from . import assembly, metric, problems
from .mesh import INTERIOR, from_arrays, generate_uniform
from .timestepper import METHODS, RunConfig, run_simulation


def check_stabilization():
    cases = [
        (assembly.peclet(0.1, 1.0, 1e-4), 500.0),
        (assembly.peclet(0.01, 2.0, 0.1), 0.1),
        (assembly.tau(0.1, 1.0, 1e-4), 0.1),
        (assembly.tau(0.1, 1.0, 0.1), 0.1 * (0.5 / 3.0)),
        (assembly.tau(0.1, 0.0, 1e-4), 0.0),
        (assembly.tau(0.1, 1.0, 0.0), 0.1),
    ]
    worst = max(abs(a - b) / max(abs(b), 1e-300) for a, b in cases)
    ok = worst <= 4 * np.finfo(float).eps and np.isinf(assembly.peclet(0.1, 1.0, 0.0))
    return "stabilization values", bool(ok), f"max rel diff {worst:.1e}"


def check_mass_block():
    mesh = from_arrays([[0, 0], [1, 0], [0, 1], [1, 1]], [[0, 1, 2], [1, 3, 2]])
    sysm = assembly.assemble(mesh, problems.linear_steady(), 0.0, supg=False)
    block = sysm.mass.toarray()[np.ix_([0, 1, 2], [0, 1, 2])]
    want = np.array([[2, 1, 1], [1, 2, 1], [1, 1, 2]]) / 24.0
    # vertices 1 and 2 are shared with the second triangle
    want[1:, 1:] += np.array([[2, 1], [1, 2]]) / 24.0
    err = np.abs(block - want).max()
    return "P1 mass block", bool(err < 1e-14), f"max diff {err:.1e}"


def check_linear_consistency(n=4, steps=10):
    prob = problems.linear_steady(b=(1.0, 1.0), eps=1e-4)
    worst = 0.0
    for method in METHODS:
        res = run_simulation(prob, RunConfig(method=method, n=n, dt=1e-3, T=steps * 1e-3))
        st = res.final
        exact = st.mesh.vertices.sum(axis=1)
        worst = max(worst, float(np.abs(st.u - exact).max()))
    return "linear solution reproduced", worst <= 1e-8, f"max nodal error {worst:.1e}"


def check_energy_gradient(instances=5, seed=0, h=1e-6):
    rng = np.random.default_rng(seed)
    cfg = metric.MmpdeConfig()
    worst = 0.0
    for _ in range(instances):
        mesh = generate_uniform(4)
        v = mesh.vertices.copy()
        inner = mesh.vertex_flags == INTERIOR
        v[inner] += rng.uniform(-0.05, 0.05, (int(inner.sum()), 2))
        mesh = mesh.with_vertices(v)
        a = rng.uniform(-1, 1, (mesh.n_elements, 2, 2))
        tens = np.einsum("kij,klj->kil", a, a) + 0.5 * np.eye(2)
        g = metric.raw_energy_gradient(mesh, tens, cfg)
        fd = np.zeros_like(g)
        for i in range(mesh.n_vertices):
            for d in range(2):
                vp, vm = v.copy(), v.copy()
                vp[i, d] += h
                vm[i, d] -= h
                fd[i, d] = (metric.energy(mesh.with_vertices(vp), tens, cfg)
                            - metric.energy(mesh.with_vertices(vm), tens, cfg)) / (2 * h)
        worst = max(worst, float(np.abs(g - fd).max() / np.abs(fd).max()))
    return "mesh energy gradient", worst <= 1e-5, f"max rel diff {worst:.1e}"


def check_manufactured_source(points=20, seed=1, h=1e-4):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for prob in (problems.example1(c=10.0, eps=1e-2), problems.example3(eps=1e-2)):
        x, y = rng.uniform(0.05, 0.95, (2, points))
        t = rng.uniform(0.0, 0.5, points)
        u = prob.exact
        ut = (u(x, y, t + h) - u(x, y, t - h)) / (2 * h)
        ux, uy = prob.exact_grad(x, y, t)
        lap = (u(x + h, y, t) + u(x - h, y, t) + u(x, y + h, t) + u(x, y - h, t)
               - 4 * u(x, y, t)) / h**2
        bx, by = prob.b(x, y, t)
        fd = ut - prob.eps * lap + bx * ux + by * uy
        f = prob.f(x, y, t)
        worst = max(worst, float(np.max(np.abs(f - fd) / np.maximum(np.abs(f), 1.0))))
    return "manufactured source", worst <= 1e-5, f"max rel diff {worst:.1e}"


CHECKS = (check_stabilization, check_mass_block, check_linear_consistency,
          check_energy_gradient, check_manufactured_source)


def run_all():
    return [c() for c in CHECKS]
