import numpy as np
import pytest

from skewflow import (
    Immersion,
    PeriodicGrid,
    diff1,
    diff2,
    frame_field,
    fundamental_forms,
    gauss_field,
    load_immersion_csv,
    make_circle,
    make_perturbed_torus,
    make_product_torus,
    save_immersion_csv,
    volume,
)
from skewflow.errors import DegenerateImmersionError
from skewflow.geometry import (
    normal_completion,
    project_field,
    rho_field,
    rotate_normal_field,
    tangent_basis_field,
    tangent_data,
)


def radial_fields(imm):
    x, y = imm.grid.meshgrid()
    r1 = np.stack([np.cos(x), np.sin(x), 0 * x, 0 * x], axis=-1)
    r2 = np.stack([0 * x, 0 * x, np.cos(y), np.sin(y)], axis=-1)
    return r1, r2


def test_grid_validation():
    with pytest.raises(ValueError):
        PeriodicGrid((7,))
    with pytest.raises(ValueError):
        PeriodicGrid((9,))
    with pytest.raises(ValueError):
        PeriodicGrid((16,), periods=(-1.0,))
    grid = PeriodicGrid((16, 32))
    assert grid.spacings == (2 * np.pi / 16, 2 * np.pi / 32)


def test_diff1_taylor_bound():
    grid = PeriodicGrid((64,))
    x = grid.axes()[0]
    err = np.abs(diff1(np.sin(x), grid, 0) - np.cos(x))
    # remainder of the centered stencil is h^2/6 * max|f'''|
    assert np.max(err) <= (2 * np.pi / 64) ** 2


def test_diff_constant_exact():
    grid = PeriodicGrid((16, 16))
    field = np.full(grid.sizes + (3,), 1.7)
    assert np.max(np.abs(diff1(field, grid, 0))) == 0.0
    assert np.max(np.abs(diff2(field, grid, 0, 1))) == 0.0


def test_diff2_taylor_bound():
    grid = PeriodicGrid((64,))
    x = grid.axes()[0]
    err = np.abs(diff2(np.sin(x), grid, 0, 0) + np.sin(x))
    assert np.max(err) <= (2 * np.pi / 64) ** 2


def test_diff2_mixed_oracle():
    grid = PeriodicGrid((48, 48))
    x, y = grid.meshgrid()
    f = np.sin(x) * np.sin(2 * y)
    exact = 2 * np.cos(x) * np.cos(2 * y)
    err = np.abs(diff2(f, grid, 0, 1) - exact)
    assert np.max(err) <= 4 * (2 * np.pi / 48) ** 2


def test_frame_field_circle():
    imm = make_circle(1.0, 64)
    frames = frame_field(imm)
    x = imm.grid.axes()[0]
    expect = np.stack([-np.sin(x), np.cos(x), 0 * x], axis=-1)
    assert np.max(np.abs(frames.e[:, 0, :] - expect)) < 1e-12
    # normal plane = span{radial, e_z}
    radial = np.stack([np.cos(x), np.sin(x), 0 * x], axis=-1)
    ez = np.zeros_like(radial)
    ez[:, 2] = 1.0
    got = np.einsum("...an,...am->...nm", frames.nu, frames.nu)
    expect_proj = np.einsum("...n,...m->...nm", radial, radial) + np.einsum("...n,...m->...nm", ez, ez)
    assert np.max(np.abs(got - expect_proj)) < 1e-12
    frames.frame_at((5,))  # validates orthonormality and orientation


def test_frame_field_product_torus_direct_differentiation():
    imm = make_product_torus(1.0, 0.5, 32)
    frames = frame_field(imm)
    x, y = imm.grid.meshgrid()
    e1 = np.stack([-np.sin(x), np.cos(x), 0 * x, 0 * x], axis=-1)
    e2 = np.stack([0 * x, 0 * x, -np.sin(y), np.cos(y)], axis=-1)
    assert np.max(np.abs(frames.e[..., 0, :] - e1)) < 1e-12
    assert np.max(np.abs(frames.e[..., 1, :] - e2)) < 1e-12
    r1, r2 = radial_fields(imm)
    got = np.einsum("...an,...am->...nm", frames.nu, frames.nu)
    expect = np.einsum("...n,...m->...nm", r1, r1) + np.einsum("...n,...m->...nm", r2, r2)
    assert np.max(np.abs(got - expect)) < 1e-12
    dets = np.linalg.det(np.concatenate([frames.e, frames.nu], axis=-2))
    assert np.min(dets) > 0


def test_frame_field_flat_patch_interior():
    # a linear chart is not parameter-periodic; the seam columns are excluded
    grid = PeriodicGrid((16, 16))
    x, y = grid.meshgrid()
    F = np.stack([x, y, 0 * x, 0 * x], axis=-1)
    frames = frame_field(Immersion(grid=grid, F=F))
    inner_e = frames.e[2:-2, 2:-2]
    assert np.max(np.abs(inner_e - inner_e[0, 0])) < 1e-12


def test_frame_field_degenerate_node_error():
    imm = make_circle(1.0, 16)
    F = imm.F.copy()
    F[:] = F[0]  # collapse to a point: zero tangent everywhere
    with pytest.raises(DegenerateImmersionError) as err:
        frame_field(Immersion(grid=imm.grid, F=F))
    assert err.value.node is not None


def test_fundamental_forms_circle_analytic_curvature():
    for r in (1.0, 2.5):
        imm = make_circle(r, 128)
        cache = fundamental_forms(imm)
        x = imm.grid.axes()[0]
        radial = np.stack([np.cos(x), np.sin(x), 0 * x], axis=-1)
        h = imm.grid.spacings[0]
        # analytic: H = -(1/r) radial; discrete stencil factor 2(1-cos h)/h^2 / sinc^2
        assert np.max(np.abs(cache.H + radial / r)) < h * h
        assert np.max(np.abs(np.linalg.norm(cache.H, axis=-1) - 1.0 / r)) < h * h


def test_fundamental_forms_product_torus_sympy_oracle():
    sympy = pytest.importorskip("sympy")
    a_val, b_val = 1.0, 0.6
    x, y = sympy.symbols("x y", real=True)
    F = sympy.Matrix([a_val * sympy.cos(x), a_val * sympy.sin(x), b_val * sympy.cos(y), b_val * sympy.sin(y)])
    tx, ty = F.diff(x), F.diff(y)
    g = sympy.Matrix([[tx.dot(tx), tx.dot(ty)], [ty.dot(ty ) * 0 + tx.dot(ty), ty.dot(ty)]])
    g = sympy.Matrix([[tx.dot(tx), tx.dot(ty)], [tx.dot(ty), ty.dot(ty)]])
    ginv = g.inv()
    d2 = {(0, 0): F.diff(x, 2), (0, 1): F.diff(x).diff(y), (1, 1): F.diff(y, 2)}
    e1 = tx / tx.norm()
    e2s = ty - ty.dot(e1) * e1
    e2 = e2s / e2s.norm()

    def nperp(v):
        return v - v.dot(e1) * e1 - v.dot(e2) * e2

    H_sym = sympy.zeros(4, 1)
    for (i, j), val in d2.items():
        w = ginv[i, j] * nperp(val)
        H_sym += w if i == j else 2 * w
    H_fn = sympy.lambdify((x, y), H_sym, "numpy")

    imm = make_product_torus(a_val, b_val, 48)
    cache = fundamental_forms(imm)
    X, Y = imm.grid.meshgrid()
    h = imm.grid.spacings[0]
    for node in [(0, 0), (5, 11), (17, 40), (33, 7)]:
        expected = np.array(H_fn(X[node], Y[node])).ravel()
        assert np.max(np.abs(cache.H[node] - expected)) < h * h
    # the normal gradient of H vanishes on the product torus
    assert np.max(np.abs(cache.grad_H_perp)) < h * h


def test_fundamental_forms_mean_curvature_vector_torus():
    imm = make_product_torus(1.0, 0.6, 64)
    cache = fundamental_forms(imm)
    r1, r2 = radial_fields(imm)
    h = imm.grid.spacings[0]
    expect = -r1 / 1.0 - r2 / 0.6
    assert np.max(np.abs(cache.H - expect)) < 2 * h * h
    # A is symmetric and H is exactly normal by construction
    assert np.max(np.abs(cache.A - np.swapaxes(cache.A, -1, -2))) == 0.0
    tang = np.einsum("...n,...in->...i", cache.H, cache.e)
    assert np.max(np.abs(tang)) < 1e-12


def test_flat_patch_interior_flatness():
    grid = PeriodicGrid((16, 16))
    x, y = grid.meshgrid()
    F = np.stack([x, y, 0 * x, 0 * x], axis=-1)
    cache = fundamental_forms(Immersion(grid=grid, F=F))
    sl = (slice(2, -2), slice(2, -2))
    assert np.max(np.abs(cache.A[sl])) < 1e-12
    assert np.max(np.abs(cache.H[sl])) < 1e-12


def test_volume_circle():
    assert volume(make_circle(1.0, 256)) == pytest.approx(2 * np.pi, abs=1e-3)


def test_volume_product_torus():
    # discrete area carries a sinc^2 factor, about 2 h^2 / 6 relative
    got = volume(make_product_torus(1.0, 0.5, 128))
    expect = 4 * np.pi**2 * 0.5
    assert abs(got - expect) / expect < 1e-3


def test_volume_scaling_homogeneity():
    imm = make_circle(1.0, 64)
    scaled = Immersion(grid=imm.grid, F=3.0 * imm.F)
    assert volume(scaled) == pytest.approx(3.0 * volume(imm), rel=1e-12)


def test_gauss_field_circle_great_circle():
    imm = make_circle(2.0, 64)
    rho = gauss_field(imm).rho
    x = imm.grid.axes()[0]
    expect = np.stack([-np.sin(x), np.cos(x), 0 * x], axis=-1)
    assert np.max(np.abs(rho - expect)) < 1e-12


def test_gauss_field_flat_patch_constant_interior():
    grid = PeriodicGrid((16, 16))
    x, y = grid.meshgrid()
    F = np.stack([x, y, 0 * x, 0 * x], axis=-1)
    rho = gauss_field(Immersion(grid=grid, F=F)).rho
    inner = rho[2:-2, 2:-2]
    assert np.max(np.abs(inner - inner[0, 0])) < 1e-12


def test_gauss_field_point_accessor():
    imm = make_product_torus(1.0, 0.7, 16)
    field = gauss_field(imm)
    point = field.point_at((3, 9))  # validates unit norm, simplicity, frame match
    assert point.frame is not None


def test_gauge_independence_of_rho_and_H():
    rng = np.random.default_rng(31)
    imm = make_perturbed_torus(1.0, 0.7, 0.04, 5, 24)
    cache = fundamental_forms(imm)
    theta = rng.uniform(0, 2 * np.pi, size=cache.e.shape[:-2])
    phi = rng.uniform(0, 2 * np.pi, size=theta.shape)
    ct, st = np.cos(theta)[..., None], np.sin(theta)[..., None]
    cp, sp = np.cos(phi)[..., None], np.sin(phi)[..., None]
    e_rot = np.stack(
        [ct * cache.e[..., 0, :] + st * cache.e[..., 1, :],
         -st * cache.e[..., 0, :] + ct * cache.e[..., 1, :]], axis=-2
    )
    nu_rot = np.stack(
        [cp * cache.nu[..., 0, :] + sp * cache.nu[..., 1, :],
         -sp * cache.nu[..., 0, :] + cp * cache.nu[..., 1, :]], axis=-2
    )
    assert np.max(np.abs(rho_field(e_rot) - rho_field(cache.e))) < 1e-10
    # recontract the mean curvature from rotated normals
    grid = imm.grid
    m = grid.m
    d2 = np.empty(grid.sizes + (m, m, 4))
    for i in range(m):
        for j in range(m):
            d2[..., i, j, :] = diff2(imm.F, grid, i, j)
    A_rot = np.einsum("...ijn,...an->...aij", d2, nu_rot)
    H_rot = np.einsum("...ij,...aij,...an->...n", cache.g_inv, A_rot, nu_rot)
    assert np.max(np.abs(H_rot - cache.H)) < 1e-10


def test_discrete_identify_invariant_product_torus():
    # unit-direction coefficients of the plane field differential vs the
    # frame-contracted second fundamental form: O(h^2), order ~2 under refinement
    errs = {}
    for size in (32, 64):
        imm = make_product_torus(1.0, 0.6, size)
        cache = fundamental_forms(imm)
        rho = rho_field(cache.e)
        drho = np.stack([diff1(rho, imm.grid, l) for l in range(2)], axis=-2)
        d_unit = np.einsum("...il,...lc->...ic", cache.R, drho)
        basis = tangent_basis_field(cache.e, cache.nu)
        lhs = np.einsum("...jac,...ic->...ija", basis, d_unit)
        rhs = np.einsum("...il,...alp,...jp->...ija", cache.R, cache.A, cache.R)
        errs[size] = np.max(np.abs(lhs - rhs))
    order = np.log2(errs[32] / errs[64])
    assert order >= 1.9


def test_normal_connection_commutes_with_rotation():
    # derivative of the rotated normal field vs rotation of the derivative
    def residual(size):
        imm = make_product_torus(1.0, 0.6, size)
        cache = fundamental_forms(imm)
        x, y = imm.grid.meshgrid()
        ambient = np.stack([np.sin(y), np.cos(x), np.sin(x), np.cos(y)], axis=-1)
        tang = np.einsum("...in,...n->...i", cache.e, ambient)
        mu = ambient - np.einsum("...i,...in->...n", tang, cache.e)
        jmu = rotate_normal_field(cache.e, mu)
        worst = 0.0
        for direction in range(2):
            djmu = diff1(jmu, imm.grid, direction)
            dmu = diff1(mu, imm.grid, direction)
            tang1 = np.einsum("...in,...n->...i", cache.e, djmu)
            lhs = djmu - np.einsum("...i,...in->...n", tang1, cache.e)
            tang2 = np.einsum("...in,...n->...i", cache.e, dmu)
            rhs = rotate_normal_field(cache.e, dmu - np.einsum("...i,...in->...n", tang2, cache.e))
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
        return worst

    r24, r48 = residual(24), residual(48)
    assert np.log2(r24 / r48) >= 0.9


def test_projection_field_matches_pointwise(tmp_path):
    from skewflow import project_to_tangent
    from skewflow.exterior import MultiVector

    rng = np.random.default_rng(33)
    imm = make_perturbed_torus(1.0, 0.8, 0.05, 2, 16)
    cache = fundamental_forms(imm)
    w = rng.standard_normal(imm.grid.sizes + (6,))
    coeffs = project_field(cache.e, cache.nu, w)
    for node in [(0, 0), (7, 3), (12, 15)]:
        frame = cache.frame_at(node)
        expect = project_to_tangent(frame, MultiVector(4, 2, w[node]))
        assert np.max(np.abs(coeffs[node] - expect)) < 1e-12


def test_normal_completion_tie_nodes():
    # grids divisible by 8 hit nodes where the two least-tangential axes
    # project onto the same normal direction; the completion must fall back
    for size in (16, 32):
        imm = make_product_torus(1.0, 1.0, size)
        _, e, *_ = tangent_data(imm)
        nu = normal_completion(e)
        gram = np.einsum("...an,...bn->...ab", nu, nu)
        assert np.max(np.abs(gram - np.eye(2))) < 1e-12
        dets = np.linalg.det(np.concatenate([e, nu], axis=-2))
        assert np.min(dets) > 0.99


def test_immersion_csv_round_trip(tmp_path):
    imm = make_product_torus(1.0, 0.5, 16)
    path = tmp_path / "torus.csv"
    save_immersion_csv(imm, path)
    back = load_immersion_csv(path, (16, 16))
    assert np.max(np.abs(back.F - imm.F)) < 1e-12
    with pytest.raises(ValueError):
        load_immersion_csv(path, (16, 32))
