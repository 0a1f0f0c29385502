import math

import numpy as np
import pytest

from mmsupg import metric as mm, problems
from mmsupg.errors import AdaptationFailure, InvalidArgumentError
from mmsupg.sparse import from_dense
from mmsupg.timestepper import METHODS, RunConfig, run_simulation, theta_step


def scalar(v):
    return from_dense(np.array([[float(v)]]))


def step1(m, a, f, u, dt, theta):
    return theta_step(scalar(m), scalar(a), scalar(a), [f], [f], np.array([u]), dt, theta)[0]


def test_theta_step_crank_nicolson_scalar():
    assert step1(1, 1, 0, 1, 0.1, 0.5) == pytest.approx(9.5 / 10.5, rel=1e-14)
    assert 9.5 / 10.5 == pytest.approx(0.9047619, abs=1e-7)


@pytest.mark.parametrize("theta", [0.0, 0.3, 0.5, 1.0])
def test_theta_step_no_dynamics(theta):
    assert step1(2, 0, 0, 0.7, 0.05, theta) == 0.7


def test_theta_step_backward_euler():
    assert step1(1, 1, 1, 0, 1.0, 1.0) == pytest.approx(0.5, rel=1e-15)


def test_theta_step_time_dependent_operator():
    # (M/dt + th A1) u1 = (M/dt - (1-th) A0) u0 + th f1 + (1-th) f0
    u = theta_step(scalar(2), scalar(1), scalar(3), [0.5], [1.5], np.array([1.0]), 0.1, 0.25)[0]
    want = ((20 - 0.75 * 1) * 1 + 0.25 * 1.5 + 0.75 * 0.5) / (20 + 0.25 * 3)
    assert u == pytest.approx(want, rel=1e-14)


def scalar_ode_error(dt, theta=0.5):
    u = 1.0
    for _ in range(int(round(1.0 / dt))):
        u = step1(1, 1, 0, u, dt, theta)
    return abs(u - math.exp(-1.0))


def test_crank_nicolson_second_order_on_scalar_ode():
    errs = [scalar_ode_error(dt) for dt in (0.1, 0.05, 0.025, 0.0125)]
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert min(orders) >= 1.9
    be = [scalar_ode_error(dt, 1.0) for dt in (0.05, 0.025)]
    assert math.log2(be[0] / be[1]) == pytest.approx(1.0, abs=0.1)


# ---------------------------------------------------------------------------
# full runs

def test_fixed_mesh_vertices_never_move():
    cfg = RunConfig(method="FM-FEM", n=6, dt=0.01, T=0.1, output_every=2)
    res = run_simulation(problems.example1(), cfg)
    assert len(res.history) == 6
    for st in res.history:
        assert np.array_equal(st.mesh.vertices, res.history[0].mesh.vertices)
    assert not res.mmpde_stats


def test_step_count_matches_final_time():
    res = run_simulation(problems.heat(), RunConfig(method="FM-FEM", n=2, dt=0.001, T=0.5))
    assert res.steps == 500
    assert res.final.step == 500 and res.final.t == pytest.approx(0.5, abs=1e-15)


def test_observer_sees_every_recorded_state():
    seen = []
    cfg = RunConfig(method="MM-SUPG", n=5, dt=0.01, T=0.05, output_every=1, init_adapt_cycles=1)
    res = run_simulation(problems.example1(), cfg, observer=lambda s: seen.append(s.step))
    assert seen == [s.step for s in res.history] == [0, 1, 2, 3, 4, 5]


@pytest.mark.parametrize("method", METHODS)
def test_linear_steady_state_reproduced(method):
    p = problems.linear_steady(b=(1.0, 1.0), eps=1e-4)
    res = run_simulation(p, RunConfig(method=method, n=6, dt=0.001, T=0.02))
    st = res.final
    assert np.abs(st.u - st.mesh.vertices.sum(axis=1)).max() <= 1e-8
    assert bool(res.mmpde_stats) == method.startswith("MM")


def test_moving_mesh_runs_record_valid_steps():
    cfg = RunConfig(method="MM-SUPG", n=8, dt=0.002, T=0.02)
    res = run_simulation(problems.example3(), cfg)
    assert len(res.mmpde_stats) == cfg.init_adapt_cycles + 10
    for s in res.mmpde_stats:
        assert s.energy_after <= s.energy_before + 1e-12
        assert s.min_area > 0


def test_runs_are_deterministic():
    cfg = RunConfig(method="MM-SUPG", n=8, dt=0.002, T=0.01, output_every=1)
    a = run_simulation(problems.example2(), cfg)
    b = run_simulation(problems.example2(), cfg)
    assert len(a.history) == len(b.history)
    for sa, sb in zip(a.history, b.history):
        assert np.array_equal(sa.u, sb.u)
        assert np.array_equal(sa.mesh.vertices, sb.mesh.vertices)
        assert sa.t == sb.t


def test_adaptation_failure_reports_step():
    cfg = RunConfig(method="MM-FEM", n=6, dt=0.01, T=0.05, init_adapt_cycles=0,
                    mmpde=mm.MmpdeConfig(d_tau=1e12))
    with pytest.raises(AdaptationFailure) as info:
        run_simulation(problems.example1(), cfg)
    assert info.value.step == 0


@pytest.mark.parametrize("kw", [
    {"method": "XX-FEM"}, {"theta": 1.5}, {"theta": -0.1}, {"dt": 0.0}, {"T": 1e-4},
    {"n": 0}, {"init_adapt_cycles": -1},
])
def test_config_validation(kw):
    with pytest.raises(InvalidArgumentError):
        RunConfig(**kw)


def test_method_names_normalised():
    assert RunConfig(method="mm_supg").method == "MM-SUPG"
    c = RunConfig(method="fm-fem")
    assert not c.moving and not c.supg


def max_overshoot(method, n):
    p = problems.example2(eps=0.0)
    res = run_simulation(p, RunConfig(method=method, n=n, dt=0.001, T=0.5))
    return res.max_abs - 1.0


def test_moving_supg_overshoot_not_worse_than_galerkin_coarse():
    fm, mm_ = max_overshoot("FM-FEM", 16), max_overshoot("MM-SUPG", 16)
    print(f"N=512 overshoot: FM-FEM {fm:.4f}  MM-SUPG {mm_:.4f}")
    assert mm_ <= fm


@pytest.mark.slow
def test_moving_supg_overshoot_not_worse_than_galerkin_fine():
    fm, mm_ = max_overshoot("FM-FEM", 64), max_overshoot("MM-SUPG", 64)
    print(f"N=8192 overshoot: FM-FEM {fm:.4f}  MM-SUPG {mm_:.4f}")
    assert mm_ <= fm
