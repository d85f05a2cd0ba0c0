"""Discrete codimension-two immersions on uniform periodic grids.

Supported cases: closed curves in R^3 (m = 1) and tori in R^4 (m = 2).
All derivatives are second-order centered differences with periodic
wraparound, so every downstream residual inherits a single O(h^2)
convergence theory.  Per-node quantities are stored as arrays with the
grid axes leading and the structural axes trailing, e.g. tangent frames
have shape sizes + (m, n).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateImmersionError, UnsupportedCaseError
from .exterior import MultiVector
from .grassmann import AdaptedFrame, GrassmannPoint

TWO_PI = 2.0 * np.pi
RANK_TOL = 1e-6  # smallest admissible singular value of the tangent map

# lexicographic pairs indexing 2-vector coefficients in R^4
_PAIRS4 = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform periodic parameter grid in one or two directions."""

    sizes: tuple[int, ...]
    periods: tuple[float, ...] | None = None

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        object.__setattr__(self, "sizes", sizes)
        if len(sizes) not in (1, 2):
            raise UnsupportedCaseError(f"grids must be 1- or 2-dimensional, got {len(sizes)} axes")
        for s in sizes:
            if s < 8 or s % 2:
                raise ValueError(f"grid sizes must be even and >= 8, got {s}")
        periods = self.periods
        if periods is None:
            periods = (TWO_PI,) * len(sizes)
        periods = tuple(float(p) for p in periods)
        if len(periods) != len(sizes) or any(p <= 0 for p in periods):
            raise ValueError("need one positive period per grid axis")
        object.__setattr__(self, "periods", periods)

    @property
    def m(self) -> int:
        return len(self.sizes)

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple(p / s for p, s in zip(self.periods, self.sizes))

    def axes(self) -> list[np.ndarray]:
        return [h * np.arange(s) for h, s in zip(self.spacings, self.sizes)]

    def meshgrid(self) -> list[np.ndarray]:
        return list(np.meshgrid(*self.axes(), indexing="ij"))

    def cell_measure(self) -> float:
        return float(np.prod(self.spacings))


@dataclass
class Immersion:
    """Node positions F of a map from the parameter grid into R^(m+2)."""

    grid: PeriodicGrid
    F: np.ndarray

    def __post_init__(self):
        self.F = np.asarray(self.F, dtype=float)
        n = self.grid.m + 2
        if self.F.shape != self.grid.sizes + (n,):
            raise ValueError(
                f"positions must have shape {self.grid.sizes + (n,)}, got {self.F.shape}"
            )

    @property
    def n(self) -> int:
        return self.F.shape[-1]


def diff1(values: np.ndarray, grid: PeriodicGrid, direction: int) -> np.ndarray:
    """Centered first difference along a grid direction, periodic wraparound."""
    h = grid.spacings[direction]
    return (np.roll(values, -1, axis=direction) - np.roll(values, 1, axis=direction)) / (2.0 * h)


def diff2(values: np.ndarray, grid: PeriodicGrid, dir_a: int, dir_b: int) -> np.ndarray:
    """Centered second difference; 3-point when dir_a == dir_b, 4-point cross otherwise."""
    ha = grid.spacings[dir_a]
    if dir_a == dir_b:
        return (
            np.roll(values, -1, axis=dir_a) - 2.0 * values + np.roll(values, 1, axis=dir_a)
        ) / (ha * ha)
    hb = grid.spacings[dir_b]
    pp = np.roll(np.roll(values, -1, axis=dir_a), -1, axis=dir_b)
    pm = np.roll(np.roll(values, -1, axis=dir_a), 1, axis=dir_b)
    mp = np.roll(np.roll(values, 1, axis=dir_a), -1, axis=dir_b)
    mm = np.roll(np.roll(values, 1, axis=dir_a), 1, axis=dir_b)
    return (pp - pm - mp + mm) / (4.0 * ha * hb)


# ---------------------------------------------------------------------------
# frames


def _locate(flat_index: int, sizes: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(int(i) for i in np.unravel_index(flat_index, sizes))


def tangent_data(imm: Immersion, time: float | None = None):
    """Coordinate tangents, induced metric and orthonormalized tangent frame.

    Returns (t, e, g, g_inv, sqrt_det_g, min_sv, R) where R expresses the
    orthonormal frame in coordinate tangents, e_i = sum_l R[i, l] d_l F.
    Raises when the smallest tangent singular value drops below threshold.
    """
    grid, F = imm.grid, imm.F
    m = grid.m
    t = np.stack([diff1(F, grid, i) for i in range(m)], axis=-2)  # (..., m, n)
    g = np.einsum("...in,...jn->...ij", t, t)
    if m == 1:
        g00 = g[..., 0, 0]
        min_sv = np.sqrt(np.maximum(g00, 0.0))
        det_g = g00
    else:
        g00, g01, g11 = g[..., 0, 0], g[..., 0, 1], g[..., 1, 1]
        det_g = g00 * g11 - g01 * g01
        half_tr = 0.5 * (g00 + g11)
        gap = np.sqrt(np.maximum((0.5 * (g00 - g11)) ** 2 + g01 * g01, 0.0))
        min_sv = np.sqrt(np.maximum(half_tr - gap, 0.0))
    if not np.all(min_sv >= RANK_TOL):
        finite = np.isfinite(min_sv)
        if not np.all(finite):
            bad = _locate(int(np.argmax(~finite)), grid.sizes)
            raise DegenerateImmersionError(
                f"tangent data is non-finite at node {bad}", node=bad, time=time
            )
        bad = _locate(int(np.argmin(min_sv)), grid.sizes)
        raise DegenerateImmersionError(
            f"tangent map is degenerate at node {bad} "
            f"(min singular value {np.min(min_sv):.3e})",
            node=bad,
            time=time,
        )
    if m == 1:
        g_inv = 1.0 / g[..., 0, 0][..., None, None]
    else:
        g_inv = np.empty_like(g)
        g_inv[..., 0, 0] = g[..., 1, 1]
        g_inv[..., 1, 1] = g[..., 0, 0]
        g_inv[..., 0, 1] = -g[..., 0, 1]
        g_inv[..., 1, 0] = -g[..., 0, 1]
        g_inv = g_inv / det_g[..., None, None]
    # Gram-Schmidt in fixed direction order
    e = np.empty_like(t)
    e[..., 0, :] = t[..., 0, :] / np.linalg.norm(t[..., 0, :], axis=-1)[..., None]
    if m == 2:
        u = t[..., 1, :] - np.einsum("...n,...n->...", t[..., 1, :], e[..., 0, :])[..., None] * e[..., 0, :]
        e[..., 1, :] = u / np.linalg.norm(u, axis=-1)[..., None]
    R = np.einsum("...in,...ln->...il", e, t) @ g_inv
    return t, e, g, g_inv, np.sqrt(det_g), min_sv, R


def normal_completion(e: np.ndarray) -> np.ndarray:
    """Deterministic oriented orthonormal basis of the normal plane.

    Ambient axes are tried in order of increasing tangential-projection norm
    (stable, so ties resolve by axis index); axes whose normal projection is
    numerically dependent on the normals found so far are skipped.  The last
    normal's sign is flipped wherever the full frame comes out negative.
    """
    m, n = e.shape[-2], e.shape[-1]
    k = n - m
    lead = e.shape[:-2]
    tangential_sq = np.sum(e * e, axis=-2)  # |P_tan(axis_j)|^2, per node
    order = np.argsort(tangential_sq, axis=-1, kind="stable")
    nu = np.zeros(lead + (k, n))
    count = np.zeros(lead, dtype=int)
    eye = np.eye(n)
    for r in range(n):
        v = eye[order[..., r]]
        v = v - np.einsum("...i,...in->...n", np.einsum("...in,...n->...i", e, v), e)
        for s in range(k):
            filled = (count > s)[..., None]
            proj = np.einsum("...n,...n->...", nu[..., s, :], v)[..., None] * nu[..., s, :]
            v = v - np.where(filled, proj, 0.0)
        nrm = np.linalg.norm(v, axis=-1)
        accept = (nrm > RANK_TOL) & (count < k)
        unit = v / np.maximum(nrm, 1e-300)[..., None]
        for s in range(k):
            put = (accept & (count == s))[..., None]
            nu[..., s, :] = np.where(put, unit, nu[..., s, :])
        count = count + accept.astype(int)
    if not np.all(count == k):
        bad = _locate(int(np.argmin(count)), lead)
        raise DegenerateImmersionError(
            f"could not complete a normal frame at node {bad}", node=bad
        )
    full = np.concatenate([e, nu], axis=-2)
    flip = (np.linalg.det(full) < 0.0)[..., None]
    nu[..., -1, :] = np.where(flip, -nu[..., -1, :], nu[..., -1, :])
    return nu


@dataclass
class FrameField:
    """Per-node adapted frames of an immersion."""

    grid: PeriodicGrid
    e: np.ndarray
    nu: np.ndarray

    def frame_at(self, node) -> AdaptedFrame:
        return AdaptedFrame(e=self.e[node], nu=self.nu[node])


def frame_field(imm: Immersion) -> FrameField:
    """Orthonormal tangents (fixed Gram-Schmidt order) plus oriented normals."""
    _, e, _, _, _, _, _ = tangent_data(imm)
    return FrameField(grid=imm.grid, e=e, nu=normal_completion(e))


@dataclass
class GeometryCache:
    """Everything the flow and the residual checks need, built once per immersion.

    ``A`` holds the second fundamental form coefficients against the normal
    frame, shape sizes + (k, m, m); ``H`` the mean curvature vector; ``R``
    the change of basis from coordinate tangents to the orthonormal frame.
    Immutable by convention after construction.
    """

    grid: PeriodicGrid
    F: np.ndarray
    e: np.ndarray
    nu: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    sqrt_det_g: np.ndarray
    A: np.ndarray
    H: np.ndarray
    grad_H_perp: np.ndarray
    R: np.ndarray
    min_sv: np.ndarray

    def frame_at(self, node) -> AdaptedFrame:
        return AdaptedFrame(e=self.e[node], nu=self.nu[node])

    @property
    def m(self) -> int:
        return self.grid.m


def fundamental_forms(imm: Immersion) -> GeometryCache:
    """First and second fundamental forms, mean curvature and its normal gradient."""
    grid, F = imm.grid, imm.F
    m = grid.m
    t, e, g, g_inv, sqrt_det_g, min_sv, R = tangent_data(imm)
    nu = normal_completion(e)

    d2 = np.empty(grid.sizes + (m, m, imm.n))
    for i in range(m):
        for j in range(i, m):
            val = diff2(F, grid, i, j)
            d2[..., i, j, :] = val
            d2[..., j, i, :] = val
    # normal part of the second coordinate derivatives
    tang = np.einsum("...ijn,...ln->...ijl", d2, e)
    d2_perp = d2 - np.einsum("...ijl,...ln->...ijn", tang, e)
    A = np.einsum("...ijn,...an->...aij", d2_perp, nu)
    H = np.einsum("...ij,...ijn->...n", g_inv, d2_perp)

    dH = np.stack([diff1(H, grid, i) for i in range(m)], axis=-2)
    grad_H_perp = dH - np.einsum("...il,...ln->...in", np.einsum("...in,...ln->...il", dH, e), e)

    return GeometryCache(
        grid=grid, F=F, e=e, nu=nu, g=g, g_inv=g_inv, sqrt_det_g=sqrt_det_g,
        A=A, H=H, grad_H_perp=grad_H_perp, R=R, min_sv=min_sv,
    )


def volume(imm: Immersion) -> float:
    """Total length (m = 1) or area (m = 2) of the discrete immersion."""
    _, _, _, _, sqrt_det_g, _, _ = tangent_data(imm)
    return float(np.sum(sqrt_det_g) * imm.grid.cell_measure())


# ---------------------------------------------------------------------------
# Grassmann-valued fields (vectorized counterparts of the pointwise API)


def wedge_pair_field(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Per-node wedge of two R^4 vector fields, lexicographic 2-vector coefficients."""
    comps = [u[..., a] * v[..., b] - u[..., b] * v[..., a] for a, b in _PAIRS4]
    return np.stack(comps, axis=-1)


def rho_field(e: np.ndarray) -> np.ndarray:
    """Unit simple m-vector of the tangent plane, per node."""
    if e.shape[-2] == 1:
        return e[..., 0, :].copy()
    return wedge_pair_field(e[..., 0, :], e[..., 1, :])


def tangent_basis_field(e: np.ndarray, nu: np.ndarray) -> np.ndarray:
    """Per-node orthonormal tangent basis of the Grassmannian, shape (..., m, k, C)."""
    m, k = e.shape[-2], nu.shape[-2]
    if m == 1:
        # degree-1 coefficients in R^3 are the vectors themselves
        return nu[..., None, :, :].copy()
    rows = []
    for i in range(m):
        slots = []
        for alpha in range(k):
            if i == 0:
                slots.append(wedge_pair_field(nu[..., alpha, :], e[..., 1, :]))
            else:
                slots.append(wedge_pair_field(e[..., 0, :], nu[..., alpha, :]))
        rows.append(np.stack(slots, axis=-2))
    return np.stack(rows, axis=-3)


def project_field(e: np.ndarray, nu: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Tangent coefficients of a multivector field, shape (..., m, k)."""
    basis = tangent_basis_field(e, nu)
    return np.einsum("...ikc,...c->...ik", basis, w)


def psi_field(e: np.ndarray, nu: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """Multivector field with given tangent coefficients."""
    basis = tangent_basis_field(e, nu)
    return np.einsum("...ik,...ikc->...c", coeffs, basis)


def jtilde_field(coeffs: np.ndarray) -> np.ndarray:
    """Complex structure on (..., m, 2) coefficient fields."""
    return np.stack([-coeffs[..., 1], coeffs[..., 0]], axis=-1)


def normal_project_field(e: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Remove the tangential part of an ambient vector field."""
    return w - np.einsum("...i,...in->...n", np.einsum("...in,...n->...i", e, w), e)


def _rotate4(e0: np.ndarray, e1: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Generalized cross product in R^4: the vector with <Jw, u> = det(e0, e1, w, u)."""
    b = wedge_pair_field(e0, e1)
    b01, b02, b03 = b[..., 0], b[..., 1], b[..., 2]
    b12, b13, b23 = b[..., 3], b[..., 4], b[..., 5]
    w0, w1, w2, w3 = w[..., 0], w[..., 1], w[..., 2], w[..., 3]
    return np.stack(
        [
            -w1 * b23 + w2 * b13 - w3 * b12,
            w0 * b23 - w2 * b03 + w3 * b02,
            -w0 * b13 + w1 * b03 - w3 * b01,
            w0 * b12 - w1 * b02 + w2 * b01,
        ],
        axis=-1,
    )


def rotate_normal_field(e: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Positive quarter-turn of the normal part of w, without a normal frame.

    Defined by <Jw, u> = det(e_1, ..., e_m, w, u); smooth wherever the
    tangent frame is, which matters when differentiating rotated fields.
    """
    n = e.shape[-1]
    if e.shape[-2] == 1 and n == 3:
        return np.cross(e[..., 0, :], w)
    if e.shape[-2] == 2 and n == 4:
        return _rotate4(e[..., 0, :], e[..., 1, :], w)
    raise UnsupportedCaseError(f"normal rotation fields need (m, n) in {{(1,3),(2,4)}}, got {(e.shape[-2], n)}")


@dataclass
class GaussField:
    """Per-node tangent planes of an immersion, as unit simple m-vectors."""

    grid: PeriodicGrid
    rho: np.ndarray
    e: np.ndarray
    nu: np.ndarray

    def point_at(self, node) -> GrassmannPoint:
        frame = AdaptedFrame(e=self.e[node], nu=self.nu[node])
        n = self.e.shape[-1]
        return GrassmannPoint(xi=MultiVector(n, self.grid.m, self.rho[node]), frame=frame)


def gauss_field(imm: Immersion, cache: GeometryCache | None = None) -> GaussField:
    if cache is None:
        frames = frame_field(imm)
        e, nu = frames.e, frames.nu
    else:
        e, nu = cache.e, cache.nu
    return GaussField(grid=imm.grid, rho=rho_field(e), e=e, nu=nu)


# ---------------------------------------------------------------------------
# benchmark geometries


def make_circle(radius: float, size: int, grid: PeriodicGrid | None = None) -> Immersion:
    grid = grid or PeriodicGrid((size,))
    x = grid.axes()[0]
    F = np.stack([radius * np.cos(x), radius * np.sin(x), np.zeros_like(x)], axis=-1)
    return Immersion(grid=grid, F=F)


def make_product_torus(a: float, b: float, size1: int, size2: int | None = None) -> Immersion:
    grid = PeriodicGrid((size1, size2 or size1))
    x, y = grid.meshgrid()
    F = np.stack(
        [a * np.cos(x), a * np.sin(x), b * np.cos(y), b * np.sin(y)], axis=-1
    )
    return Immersion(grid=grid, F=F)


def _trig_polynomial(rng: np.random.Generator, x: np.ndarray, y: np.ndarray, max_mode: int = 1) -> np.ndarray:
    """Seeded low-frequency trig polynomial with sum(|coeff|) = 1.

    Coefficients are drawn once per call, independent of the grid, so the
    same seed refines the same smooth function under grid refinement.  The
    mode cap stays at 1 so the coarsest benchmark grids already sit in the
    asymptotic stencil range.
    """
    coeffs = rng.standard_normal((max_mode + 1, max_mode + 1, 4))
    coeffs /= np.sum(np.abs(coeffs))
    out = np.zeros_like(x)
    for p in range(max_mode + 1):
        for q in range(max_mode + 1):
            cc, cs, sc, ss = coeffs[p, q]
            out += (
                cc * np.cos(p * x) * np.cos(q * y)
                + cs * np.cos(p * x) * np.sin(q * y)
                + sc * np.sin(p * x) * np.cos(q * y)
                + ss * np.sin(p * x) * np.sin(q * y)
            )
    return out


def make_perturbed_torus(
    a: float, b: float, eps: float, seed: int, size1: int, size2: int | None = None
) -> Immersion:
    """Product torus displaced by eps times a fixed smooth normal field."""
    grid = PeriodicGrid((size1, size2 or size1))
    x, y = grid.meshgrid()
    rng = np.random.default_rng(seed)
    phi1 = _trig_polynomial(rng, x, y)
    phi2 = _trig_polynomial(rng, x, y)
    r1 = np.stack([np.cos(x), np.sin(x), np.zeros_like(x), np.zeros_like(x)], axis=-1)
    r2 = np.stack([np.zeros_like(x), np.zeros_like(x), np.cos(y), np.sin(y)], axis=-1)
    base = np.stack([a * np.cos(x), a * np.sin(x), b * np.cos(y), b * np.sin(y)], axis=-1)
    F = base + eps * (phi1[..., None] * r1 + phi2[..., None] * r2)
    return Immersion(grid=grid, F=F)


def make_perturbed_circle(r: float, eps: float, seed: int, size: int) -> Immersion:
    """Circle displaced by eps times fixed smooth radial and vertical fields."""
    grid = PeriodicGrid((size,))
    x = grid.axes()[0]
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal((2, 3))
    coeffs /= np.sum(np.abs(coeffs), axis=1, keepdims=True)
    waves = np.stack([np.ones_like(x), np.cos(x), np.sin(x)], axis=-1)
    phi, chi = waves @ coeffs[0], waves @ coeffs[1]
    radial = np.stack([np.cos(x), np.sin(x), np.zeros_like(x)], axis=-1)
    vertical = np.zeros_like(radial)
    vertical[:, 2] = 1.0
    F = r * radial + eps * (phi[:, None] * radial + chi[:, None] * vertical)
    return Immersion(grid=grid, F=F)


def load_immersion_csv(path, sizes, periods=None) -> Immersion:
    """Node positions from CSV (columns x1..xn, rows in row-major grid order)."""
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    start = 0
    try:
        [float(v) for v in rows[0]]
    except ValueError:
        start = 1  # header row
    data = np.array([[float(v) for v in row] for row in rows[start:]])
    grid = PeriodicGrid(tuple(sizes), periods)
    n = grid.m + 2
    if data.shape != (int(np.prod(grid.sizes)), n):
        raise ValueError(
            f"CSV holds {data.shape} values, expected {(int(np.prod(grid.sizes)), n)} "
            f"for grid {grid.sizes}"
        )
    return Immersion(grid=grid, F=data.reshape(grid.sizes + (n,)))


def save_immersion_csv(imm: Immersion, path):
    n = imm.n
    flat = imm.F.reshape(-1, n)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{j + 1}" for j in range(n)])
        writer.writerows(flat.tolist())
