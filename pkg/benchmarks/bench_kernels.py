"""Compare the compiled and NumPy kernel backends.

Usage: python benchmarks/bench_kernels.py [--n 64] [--repeat 20]

Times the mesh-energy (with gradient) and point-location kernels on a
perturbed uniform mesh and checks that both backends agree.
"""
import argparse
import time

import numpy as np

from mmsupg import _kernels_py, metric
from mmsupg.mesh import INTERIOR, generate_uniform

try:
    from mmsupg import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None


def _setup(n, seed=0):
    rng = np.random.default_rng(seed)
    mesh = generate_uniform(n)
    v = mesh.vertices.copy()
    inner = mesh.vertex_flags == INTERIOR
    v[inner] += rng.uniform(-0.2, 0.2, (int(inner.sum()), 2)) / n
    mesh = mesh.with_vertices(v)
    ne = mesh.n_elements
    a = rng.uniform(0.5, 2.0, ne)
    trace = np.ascontiguousarray(np.column_stack([a, 0.1 * rng.standard_normal(ne), 1.0 / a]))
    sqrt_det = rng.uniform(0.5, 2.0, ne)
    pts = rng.uniform(0.0, 1.0, (mesh.n_vertices, 2))
    seeds = rng.integers(0, ne, mesh.n_vertices)
    return mesh, trace, sqrt_det, pts, seeds


def _time(fn, repeat):
    fn()
    t0 = time.perf_counter()
    for _ in range(repeat):
        out = fn()
    return (time.perf_counter() - t0) / repeat, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)
    mesh, trace, sqrt_det, pts, seeds = _setup(args.n)
    v = np.ascontiguousarray(mesh.vertices)
    tri = np.ascontiguousarray(mesh.triangles, dtype=np.int64)
    nb = np.ascontiguousarray(mesh.element_neighbors(), dtype=np.int64)
    backends = [("python", _kernels_py)] + ([("cython", _compiled)] if _compiled else [])
    print(f"mesh: n={args.n} ({mesh.n_elements} triangles), repeat={args.repeat}")
    results = {}
    for name, mod in backends:
        te, (e, _, g) = _time(lambda: mod.mesh_energy(v, tri, trace, sqrt_det, metric.REF_EDGES,
                                                      1.0 / 3.0, 1.5, True), args.repeat)
        tl, (el, _, found) = _time(lambda: mod.locate(pts, v, tri, nb, seeds), args.repeat)
        results[name] = (te, tl, e, g, el, found)
        print(f"{name:7s} mesh_energy+grad {te * 1e3:9.3f} ms   locate {tl * 1e3:9.3f} ms")
    if "cython" in results:
        p, c = results["python"], results["cython"]
        print(f"speedup  mesh_energy x{p[0] / c[0]:.1f}   locate x{p[1] / c[1]:.1f}")
        print(f"agreement: energy rel diff {abs(p[2] - c[2]) / abs(p[2]):.1e}, "
              f"grad max diff {np.abs(p[3] - c[3]).max():.1e}, "
              f"same elements {bool(np.all(p[4] == c[4]) and np.all(p[5] == c[5]))}")
    else:
        print("compiled backend not built; only the NumPy fallback was timed")


if __name__ == "__main__":
    main()
