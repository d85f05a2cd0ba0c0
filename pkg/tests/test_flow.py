import math

import numpy as np
import pytest

from skewflow import (
    FlowConfig,
    FlowState,
    Immersion,
    Trajectory,
    fitted_torus_radii,
    fundamental_forms,
    make_circle,
    make_perturbed_torus,
    make_product_torus,
    normal_rotate,
    product_torus_ode_oracle,
    run,
    stable_dt,
    step,
    velocity,
    volume,
)
from skewflow.errors import DegenerateImmersionError


def stencil_factor(size):
    # centered second difference of a frequency-1 circle: 2(1-cos h)/h^2 / sinc(h)^2
    h = 2 * np.pi / size
    return 2.0 / (1.0 + np.cos(h))


def radial_fields(imm):
    x, y = imm.grid.meshgrid()
    r1 = np.stack([np.cos(x), np.sin(x), 0 * x, 0 * x], axis=-1)
    r2 = np.stack([0 * x, 0 * x, np.cos(y), np.sin(y)], axis=-1)
    return r1, r2


def test_config_validation():
    with pytest.raises(ValueError):
        FlowConfig(dt=0.0)
    with pytest.raises(ValueError):
        FlowConfig(flow_kind="bogus")
    with pytest.raises(ValueError):
        FlowConfig(scheme="RK2")
    with pytest.raises(ValueError):
        FlowConfig(output_every=0)


def test_velocity_circle_is_binormal_curvature():
    for r, size in [(1.0, 64), (2.0, 128)]:
        imm = make_circle(r, size)
        v = velocity(imm, "SMCF")
        expect = np.array([0.0, 0.0, stencil_factor(size) / r])
        assert np.max(np.abs(v - expect)) < 1e-12  # constant over nodes, exact form
        h = imm.grid.spacings[0]
        assert np.max(np.abs(v - np.array([0, 0, 1.0 / r]))) < h * h  # analytic k*b


def test_velocity_flat_patch_interior_zero():
    from skewflow import PeriodicGrid

    grid = PeriodicGrid((16, 16))
    x, y = grid.meshgrid()
    imm = Immersion(grid=grid, F=np.stack([x, y, 0 * x, 0 * x], axis=-1))
    for kind in ("SMCF", "MCF"):
        v = velocity(imm, kind)
        assert np.max(np.abs(v[2:-2, 2:-2])) < 1e-12


def test_velocity_product_torus_sign_convention():
    a, b = 1.0, 0.6
    imm = make_product_torus(a, b, 48)
    v = velocity(imm, "SMCF")
    r1, r2 = radial_fields(imm)
    h = imm.grid.spacings[0]
    assert np.max(np.abs(v - (-(1.0 / b) * r1 + (1.0 / a) * r2))) < 2 * h * h
    kappa = stencil_factor(48)
    assert np.max(np.abs(v - (-(kappa / b) * r1 + (kappa / a) * r2))) < 1e-12


def test_velocity_matches_frame_rotation_of_H():
    imm = make_perturbed_torus(1.0, 0.7, 0.05, 3, 16)
    cache = fundamental_forms(imm)
    v = velocity(imm, "SMCF")
    for node in [(0, 0), (5, 9), (13, 2)]:
        expect = normal_rotate(cache.frame_at(node), cache.H[node])
        assert np.max(np.abs(v[node] - expect)) < 1e-12
    assert np.max(np.abs(velocity(imm, "MCF") - cache.H)) < 1e-12


def test_velocity_jit_and_numpy_paths_agree():
    from skewflow import _kernels
    from skewflow.flow import _velocity_m2, _velocity_m2_numpy

    if not _kernels.HAVE_NUMBA:
        pytest.skip("numba not installed; only the numpy path exists")
    imm = make_perturbed_torus(1.0, 0.7, 0.05, 11, 24)
    for kind in ("SMCF", "MCF"):
        jit = _velocity_m2(imm.F, imm.grid, kind, None)
        ref = _velocity_m2_numpy(imm.F, imm.grid, kind, None)
        assert np.max(np.abs(jit - ref)) < 1e-13


def test_velocity_degenerate_torus_reports_node():
    imm = make_product_torus(1.0, 0.5, 16)
    F = imm.F.copy()
    F[3, :, :] = F[2, :, :]  # duplicate a grid line; stays finite but rank-deficient
    F[4, :, :] = F[2, :, :]
    with pytest.raises(DegenerateImmersionError) as err:
        velocity(Immersion(grid=imm.grid, F=F), "SMCF")
    assert err.value.node is not None
    assert err.value.node[0] == 3


def test_velocity_is_normal():
    imm = make_perturbed_torus(1.0, 0.6, 0.05, 7, 24)
    cache = fundamental_forms(imm)
    for kind in ("SMCF", "MCF"):
        v = velocity(imm, kind)
        tang = np.einsum("...in,...n->...i", cache.e, v)
        scale = np.linalg.norm(v, axis=-1) + 1e-30
        assert np.max(np.abs(tang) / scale[..., None]) < 1e-10


def test_step_zero_velocity_is_identity():
    imm = make_product_torus(1.0, 0.5, 16)
    state = FlowState(t=0.0, immersion=imm)
    cfg = FlowConfig(dt=1e-3, t_end=1e-2)
    frozen = lambda F, t: np.zeros_like(F)
    out = state
    for _ in range(5):
        out = step(out, cfg, velocity_fn=frozen)
    assert np.array_equal(out.immersion.F, imm.F)
    assert out.t == pytest.approx(5e-3)


def test_run_output_cadence_and_invariants():
    imm = make_product_torus(1.0, 1.0, 16)
    cfg = FlowConfig(dt=1e-3, t_end=1e-2, output_every=3)
    traj = run(imm, cfg)
    ts = [s.t for s in traj.states]
    assert ts[0] == 0.0
    assert ts[-1] == pytest.approx(1e-2)
    assert all(b > a for a, b in zip(ts, ts[1:]))
    with pytest.raises(ValueError):
        Trajectory(states=[traj[1], traj[0]])


def test_translating_circle_stable_dt():
    # exact solution: rigid translation along the binormal with speed
    # stencil_factor/r; radius and tangent field are preserved
    size, T = 128, 0.1
    imm = make_circle(1.0, size)
    dt = stable_dt(imm)  # 0.1 h^2
    steps = math.ceil(T / dt)
    cfg = FlowConfig(flow_kind="SMCF", dt=T / steps, t_end=T, scheme="RK4", output_every=10**9)
    traj = run(imm, cfg)
    F = traj[-1].immersion.F
    expect_z = T * stencil_factor(size)
    assert abs(float(np.mean(F[:, 2])) - expect_z) < 1e-10
    assert np.max(np.abs(np.hypot(F[:, 0], F[:, 1]) - 1.0)) < 1e-10
    assert np.max(np.abs(F[:, 2] - expect_z)) < 1e-10  # stays planar


def test_unstable_step_aborts_with_location():
    # far above the dispersive stability bound the high modes blow up and the
    # degeneracy detector must fire with a located, timed error
    imm = make_circle(1.0, 64)
    cfg = FlowConfig(flow_kind="SMCF", dt=5e-2, t_end=5.0, scheme="RK4")
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(DegenerateImmersionError) as err:
            run(imm, cfg)
    assert err.value.time is not None
    assert err.value.time < 5.0


def test_product_torus_stays_product_form():
    imm = make_product_torus(1.0, 1.0, 32)
    dt = stable_dt(imm, 0.2)
    cfg = FlowConfig(flow_kind="SMCF", dt=dt, t_end=50 * dt, output_every=10)
    traj = run(imm, cfg)
    a_fit, b_fit, dev = fitted_torus_radii(traj[-1].immersion)
    assert dev < 1e-10
    assert a_fit * b_fit == pytest.approx(1.0, abs=1e-10)


def test_ode_oracle_symmetric_closed_form():
    # with equal radii the product is conserved, so a' = -a: a(t) = e^{-t}
    ts, a, b = product_torus_ode_oracle(1.0, 1.0, 0.25, 1e-4)
    assert a[-1] == pytest.approx(0.7788007830714049, abs=1e-10)  # e^{-1/4}
    assert b[-1] == pytest.approx(1.2840254166877414, abs=1e-10)  # e^{+1/4}


def test_ode_oracle_conserves_product():
    ts, a, b = product_torus_ode_oracle(1.3, 0.8, 0.2, 1e-4, output_every=100)
    assert np.max(np.abs(a * b - 1.3 * 0.8)) < 1e-10


def test_ode_oracle_sign_flip_reverses():
    ts, a, b = product_torus_ode_oracle(1.0, 0.9, 0.15, 1e-4)
    ts2, a2, b2 = product_torus_ode_oracle(a[-1], b[-1], 0.15, 1e-4, s=-1.0)
    assert a2[-1] == pytest.approx(1.0, abs=1e-10)
    assert b2[-1] == pytest.approx(0.9, abs=1e-10)


def test_ode_oracle_rejects_bad_radii():
    with pytest.raises(ValueError):
        product_torus_ode_oracle(-1.0, 1.0, 0.1, 1e-3)


def test_ode_oracle_blow_up_detected():
    # exact radii decay exponentially (a*b is conserved) and never vanish, so
    # the zero-crossing guard fires only when a coarse step overshoots
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        with pytest.raises(DegenerateImmersionError) as err:
            product_torus_ode_oracle(0.05, 1.0, 1.0, 0.1)
    assert err.value.time is not None


def test_pde_radii_track_ode_oracle():
    size, T = 64, 0.05
    imm = make_product_torus(1.0, 1.0, size)
    dt = stable_dt(imm, 0.2)
    steps = math.ceil(T / dt)
    cfg = FlowConfig(flow_kind="SMCF", dt=T / steps, t_end=T, output_every=10**9)
    traj = run(imm, cfg)
    _, a_o, b_o = product_torus_ode_oracle(1.0, 1.0, T, 1e-5)
    a_fit, b_fit, _ = fitted_torus_radii(traj[-1].immersion)
    h = imm.grid.spacings[0]
    # discrepancy is the stencil factor kappa - 1 ~ h^2/4 integrated over [0, T]
    bound = 2.0 * T * (stencil_factor(size) - 1.0)
    assert abs(a_fit - a_o[-1]) < bound
    assert abs(b_fit - b_o[-1]) < bound
    assert bound < 3e-4


def test_euler_vs_rk4_first_order_difference():
    imm = make_product_torus(1.0, 0.8, 16)
    T = 0.004
    diffs = []
    for dt in (2e-4, 1e-4):
        outs = {}
        for scheme in ("Euler", "RK4"):
            cfg = FlowConfig(dt=dt, t_end=T, scheme=scheme, output_every=10**9)
            outs[scheme] = run(imm, cfg)[-1].immersion.F
        diffs.append(np.max(np.abs(outs["Euler"] - outs["RK4"])))
    order = np.log2(diffs[0] / diffs[1])
    assert 0.8 <= order <= 1.3


def test_volume_conserved_under_skew_flow_unit_time():
    # the shrinking radius tightens the stability bound, hence the small factor
    imm = make_product_torus(1.0, 1.0, 24)
    dt = stable_dt(imm, 0.05)
    steps = math.ceil(1.0 / dt)
    cfg = FlowConfig(flow_kind="SMCF", dt=1.0 / steps, t_end=1.0, output_every=10**9)
    traj = run(imm, cfg)
    v0, v1 = volume(traj[0].immersion), volume(traj[-1].immersion)
    assert abs(v1 - v0) / v0 < 1e-6


def test_volume_conserved_on_perturbed_torus():
    imm = make_perturbed_torus(1.0, 0.8, 0.05, 7, 32)
    dt = stable_dt(imm, 0.1)
    T = 0.05
    steps = math.ceil(T / dt)
    cfg = FlowConfig(flow_kind="SMCF", dt=T / steps, t_end=T, output_every=10**9)
    traj = run(imm, cfg)
    v0, v1 = volume(traj[0].immersion), volume(traj[-1].immersion)
    h = imm.grid.spacings[0]
    # C fitted once on this benchmark and frozen (measured drift is 2e-6 h^2)
    assert abs(v1 - v0) / v0 <= max(1e-6, 1e-5 * (h * h + cfg.dt**4))


def test_mcf_volume_strictly_decreases():
    imm = make_perturbed_torus(1.0, 0.8, 0.05, 7, 24)
    dt = stable_dt(imm, 0.1)
    cfg = FlowConfig(flow_kind="MCF", dt=dt, t_end=30 * dt, output_every=6)
    traj = run(imm, cfg)
    volumes = [volume(s.immersion) for s in traj.states]
    assert all(b < a for a, b in zip(volumes, volumes[1:]))
