"""Benchmark convection-diffusion problems on the unit square.

Every callback is vectorized: it takes coordinate arrays ``x, y`` (any
common shape) and a scalar time ``t``. Flow fields return ``(bx, by)``,
flow Jacobians return ``((dbx/dx, dbx/dy), (dby/dx, dby/dy))`` and exact
gradients return ``(ux, uy)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InvalidArgumentError

DIRICHLET_EXACT = "dirichlet-from-exact"
INFLOW_DIRICHLET = "inflow-dirichlet-zero-outflow-neumann"
DIRICHLET_ZERO = "dirichlet-zero"
BC_KINDS = (DIRICHLET_EXACT, INFLOW_DIRICHLET, DIRICHLET_ZERO)


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    eps: float
    b: Callable
    grad_b: Optional[Callable]
    f: Callable
    bc: str
    u0: Callable
    exact: Optional[Callable] = None
    exact_grad: Optional[Callable] = None
    constant_flow: bool = False

    def __post_init__(self):
        if self.bc not in BC_KINDS:
            raise InvalidArgumentError(f"unknown boundary condition {self.bc!r}")
        if self.bc == DIRICHLET_EXACT and self.exact is None:
            raise InvalidArgumentError("dirichlet-from-exact needs an exact solution")
        if self.eps < 0:
            raise InvalidArgumentError("diffusivity must be non-negative")

    def boundary_value(self, x, y, t):
        if self.bc == DIRICHLET_EXACT:
            return self.exact(x, y, t)
        return np.zeros(np.shape(x))


def _constant_flow(b1, b2):
    def b(x, y, t):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape, float(b1)), np.full(x.shape, float(b2))
    return b


def _logistic(z):
    # (1 + e^z)^-1 without overflow
    return 0.5 * (1.0 - np.tanh(0.5 * z))


def example1(c=100.0, eps=1e-4):
    """Traveling layer u = (1 + exp(c (x + y - t)))^-1 with b = (1, 1)."""
    if c <= 0:
        raise InvalidArgumentError("sharpness c must be positive")
    if eps < 0:
        raise InvalidArgumentError("diffusivity must be non-negative")
    c, eps = float(c), float(eps)

    def exact(x, y, t):
        return _logistic(c * (np.asarray(x) + y - t))

    def exact_grad(x, y, t):
        s = exact(x, y, t)
        g = -c * s * (1.0 - s)
        return g, g

    def f(x, y, t):
        s = exact(x, y, t)
        r = s * (1.0 - s)
        return -c * r - 2.0 * eps * c * c * r * (1.0 - 2.0 * s)

    return ProblemSpec(
        name="example1", eps=eps, b=_constant_flow(1.0, 1.0), grad_b=None, f=f,
        bc=DIRICHLET_EXACT, u0=lambda x, y: exact(x, y, 0.0), exact=exact,
        exact_grad=exact_grad, constant_flow=True,
    )


CYLINDER_CENTER = (0.25, 0.25)
CYLINDER_RADIUS = 0.2
EXAMPLE2_FLOW = (1.0, 0.7002075)


def example2(eps=1e-4):
    """Cylinder convected by b = (1, 0.7002075); no exact solution."""
    if eps < 0:
        raise InvalidArgumentError("diffusivity must be non-negative")

    def u0(x, y):
        r2 = (np.asarray(x) - CYLINDER_CENTER[0]) ** 2 + (np.asarray(y) - CYLINDER_CENTER[1]) ** 2
        return np.where(r2 <= CYLINDER_RADIUS ** 2, 1.0, 0.0)

    def f(x, y, t):
        return np.zeros(np.shape(x))

    return ProblemSpec(
        name="example2", eps=float(eps), b=_constant_flow(*EXAMPLE2_FLOW), grad_b=None,
        f=f, bc=INFLOW_DIRICHLET, u0=u0, constant_flow=True,
    )


def example3(flow="constant", eps=1e-6):
    """Oscillating hill with a circular interior layer of width ~sqrt(eps).

    ``flow`` is "constant" for b = (2, 3) or "time-dependent" for
    b = (y - t, x - t).
    """
    if eps <= 0:
        raise InvalidArgumentError("example3 needs eps > 0")
    eps = float(eps)
    k = 2.0 / np.sqrt(eps)

    def parts(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        q = x * (1 - x) * y * (1 - y)
        qx = (1 - 2 * x) * y * (1 - y)
        qy = x * (1 - x) * (1 - 2 * y)
        w = 0.0625 - (x - 0.5) ** 2 - (y - 0.5) ** 2
        wx, wy = -2 * (x - 0.5), -2 * (y - 0.5)
        s = k * w
        d = 1.0 / (1.0 + s * s)
        a = 0.5 + np.arctan(s) / np.pi
        ax = k * wx * d / np.pi
        ay = k * wy * d / np.pi
        return x, y, q, qx, qy, wx, wy, s, d, a, ax, ay

    def exact(x, y, t):
        _, _, q, _, _, _, _, _, _, a, _, _ = parts(x, y)
        return 16.0 * np.sin(np.pi * t) * q * a

    def exact_grad(x, y, t):
        _, _, q, qx, qy, _, _, _, _, a, ax, ay = parts(x, y)
        amp = 16.0 * np.sin(np.pi * t)
        return amp * (qx * a + q * ax), amp * (qy * a + q * ay)

    if flow == "constant":
        b = _constant_flow(2.0, 3.0)
        grad_b = None
    elif flow in ("time-dependent", "time_dependent", "rotating"):
        def b(x, y, t):
            return np.asarray(y, dtype=float) - t, np.asarray(x, dtype=float) - t

        def grad_b(x, y, t):
            z = np.zeros(np.shape(x))
            o = np.ones(np.shape(x))
            return (z, o), (o, z)
    else:
        raise InvalidArgumentError(f"unknown flow {flow!r}")

    def f(x, y, t):
        x, y, q, qx, qy, wx, wy, s, d, a, ax, ay = parts(x, y)
        amp = 16.0 * np.sin(np.pi * t)
        ut = 16.0 * np.pi * np.cos(np.pi * t) * q * a
        ux = amp * (qx * a + q * ax)
        uy = amp * (qy * a + q * ay)
        # second derivatives of the arctan factor; w_xx = w_yy = -2
        axx = (k / np.pi) * (-2.0 * d - 2.0 * s * k * wx * wx * d * d)
        ayy = (k / np.pi) * (-2.0 * d - 2.0 * s * k * wy * wy * d * d)
        qxx = -2.0 * y * (1 - y)
        qyy = -2.0 * x * (1 - x)
        lap = amp * (qxx * a + 2 * qx * ax + q * axx + qyy * a + 2 * qy * ay + q * ayy)
        bx, by = b(x, y, t)
        return ut + bx * ux + by * uy - eps * lap

    return ProblemSpec(
        name="example3", eps=eps, b=b, grad_b=grad_b, f=f, bc=DIRICHLET_ZERO,
        u0=lambda x, y: np.zeros(np.shape(x)), exact=exact, exact_grad=exact_grad,
        constant_flow=grad_b is None,
    )


def linear_steady(b=(1.0, 1.0), eps=1e-4):
    """u = x + y, an exact steady solution inside the linear finite element space."""
    b1, b2 = map(float, b)

    def exact(x, y, t):
        return np.asarray(x, dtype=float) + y

    def exact_grad(x, y, t):
        return np.ones(np.shape(x)), np.ones(np.shape(x))

    return ProblemSpec(
        name="linear", eps=float(eps), b=_constant_flow(b1, b2), grad_b=None,
        f=lambda x, y, t: np.full(np.shape(x), b1 + b2), bc=DIRICHLET_EXACT,
        u0=lambda x, y: exact(x, y, 0.0), exact=exact, exact_grad=exact_grad,
        constant_flow=True,
    )


def heat(omega=2.0 * np.pi):
    """Pure diffusion (b = 0, eps = 1) with u = sin(pi x) sin(pi y) cos(omega t)."""
    pi = np.pi

    def exact(x, y, t):
        return np.sin(pi * np.asarray(x)) * np.sin(pi * np.asarray(y)) * np.cos(omega * t)

    def exact_grad(x, y, t):
        x, y = np.asarray(x), np.asarray(y)
        c = np.cos(omega * t)
        return pi * np.cos(pi * x) * np.sin(pi * y) * c, pi * np.sin(pi * x) * np.cos(pi * y) * c

    def f(x, y, t):
        s = np.sin(pi * np.asarray(x)) * np.sin(pi * np.asarray(y))
        return s * (-omega * np.sin(omega * t) + 2 * pi * pi * np.cos(omega * t))

    return ProblemSpec(
        name="heat", eps=1.0, b=_constant_flow(0.0, 0.0), grad_b=None, f=f,
        bc=DIRICHLET_EXACT, u0=lambda x, y: exact(x, y, 0.0), exact=exact,
        exact_grad=exact_grad, constant_flow=True,
    )


def by_name(name, **kw):
    """Build a problem from CLI-style arguments (unused or None keys are ignored)."""
    kw = {k: v for k, v in kw.items() if v is not None}
    if name == "example1":
        return example1(c=kw.get("c", 100.0), eps=kw.get("eps", 1e-4))
    if name == "example2":
        return example2(eps=kw.get("eps", 1e-4))
    if name == "example3":
        return example3(flow=kw.get("flow", "constant"), eps=kw.get("eps", 1e-6))
    if name == "linear":
        return linear_steady(eps=kw.get("eps", 1e-4))
    if name == "heat":
        return heat()
    raise InvalidArgumentError(f"unknown problem {name!r}")
