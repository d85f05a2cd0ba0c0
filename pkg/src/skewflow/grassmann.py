"""The oriented Grassmannian G(m, k) of m-planes in R^n, n = m + k.

A plane is represented by the unit simple m-vector spanned by any oriented
orthonormal basis; the tangent space at a point is spanned by the wedges
obtained by swapping one tangent leg for a normal one.  The coefficient
matrix of a tangent vector against that basis realises the tensor-product
picture (plane) x (complement), and for k = 2 carries the complex structure
that rotates the normal leg by a quarter turn.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FrameError, NotNormalError, NotTangentError, UnsupportedCaseError
from .exterior import MultiVector, inner, simplicity_residual, wedge_vectors

FRAME_TOL = 1e-10
TANGENT_TOL = 1e-8  # upstream discretisation noise exceeds machine epsilon


@dataclass
class AdaptedFrame:
    """Oriented orthonormal basis of R^n split as (plane | complement).

    ``e`` has shape (m, n) and spans the plane, ``nu`` has shape (k, n) and
    spans the orthogonal complement; the stacked frame must be positively
    oriented.
    """

    e: np.ndarray
    nu: np.ndarray

    def __post_init__(self):
        self.e = np.atleast_2d(np.asarray(self.e, dtype=float))
        self.nu = np.atleast_2d(np.asarray(self.nu, dtype=float))
        if self.e.shape[1] != self.nu.shape[1]:
            raise FrameError("tangent and normal vectors live in different dimensions")
        full = np.vstack([self.e, self.nu])
        if full.shape[0] != full.shape[1]:
            raise FrameError(
                f"{full.shape[0]} frame vectors cannot span R^{full.shape[1]}"
            )
        gram = full @ full.T
        if np.max(np.abs(gram - np.eye(self.n))) > FRAME_TOL:
            raise FrameError("frame is not orthonormal to tolerance")
        if np.linalg.det(full) <= 0:
            raise FrameError("frame is negatively oriented")

    @property
    def n(self) -> int:
        return self.e.shape[1]

    @property
    def m(self) -> int:
        return self.e.shape[0]

    @property
    def k(self) -> int:
        return self.nu.shape[0]


@dataclass
class GrassmannPoint:
    """A point of G(m, k): a unit simple m-vector, with an optional frame."""

    xi: MultiVector
    frame: AdaptedFrame | None = None

    def __post_init__(self):
        if abs(inner(self.xi, self.xi) - 1.0) > FRAME_TOL:
            raise FrameError("Grassmann point is not a unit multivector")
        if self.xi.degree == 2 and self.xi.n == 4:
            if simplicity_residual(self.xi) > FRAME_TOL:
                raise FrameError("2-vector in R^4 violates the simplicity relation")
        if self.frame is not None:
            spanned = wedge_vectors(self.frame.e)
            if np.max(np.abs(spanned.coeffs - self.xi.coeffs)) > FRAME_TOL:
                raise FrameError("frame does not span the stored multivector")


def embed(frame: AdaptedFrame) -> GrassmannPoint:
    """Unit simple m-vector of the plane; independent of the oriented basis."""
    return GrassmannPoint(xi=wedge_vectors(frame.e), frame=frame)


def tangent_basis(frame: AdaptedFrame) -> list[list[MultiVector]]:
    """Orthonormal tangent basis at the frame's plane.

    Entry [i][alpha] is the wedge of the plane basis with leg i replaced by
    normal vector alpha.  Returned nested as m rows of k multivectors.
    """
    basis = []
    for i in range(frame.m):
        row = []
        for alpha in range(frame.k):
            legs = frame.e.copy()
            legs[i] = frame.nu[alpha]
            row.append(wedge_vectors(legs))
        basis.append(row)
    return basis


def project_to_tangent(frame: AdaptedFrame, w: MultiVector) -> np.ndarray:
    """Coefficients of the tangential part of w, as an (m, k) matrix."""
    if w.n != frame.n or w.degree != frame.m:
        raise ValueError(
            f"multivector (n={w.n}, degree={w.degree}) does not match frame "
            f"(n={frame.n}, m={frame.m})"
        )
    basis = tangent_basis(frame)
    out = np.empty((frame.m, frame.k))
    for i in range(frame.m):
        for alpha in range(frame.k):
            out[i, alpha] = inner(w, basis[i][alpha])
    return out


def psi(frame: AdaptedFrame, coeffs) -> MultiVector:
    """Tangent multivector with the given (m, k) coefficient matrix."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (frame.m, frame.k):
        raise ValueError(f"expected coefficient shape {(frame.m, frame.k)}, got {coeffs.shape}")
    basis = tangent_basis(frame)
    out = MultiVector.zero(frame.n, frame.m)
    for i in range(frame.m):
        for alpha in range(frame.k):
            out = out + coeffs[i, alpha] * basis[i][alpha]
    return out


def psi_inv(frame: AdaptedFrame, v: MultiVector, tol: float = TANGENT_TOL) -> np.ndarray:
    """Coefficient matrix of a tangent multivector; errors if v leaves the span."""
    coeffs = project_to_tangent(frame, v)
    residual = (v - psi(frame, coeffs)).norm()
    if residual > tol * max(1.0, v.norm()):
        raise NotTangentError(
            f"multivector has out-of-tangent component {residual:.3e} beyond tolerance {tol:.1e}"
        )
    return coeffs


def normal_rotate(frame: AdaptedFrame, w) -> np.ndarray:
    """Quarter-turn of a normal vector, positively w.r.t. the frame orientation.

    For a valid frame the rotation sends nu_1 -> nu_2 and nu_2 -> -nu_1, which
    makes (e_1, ..., e_m, w, Jw) positively oriented for every nonzero normal w.
    """
    if frame.k != 2:
        raise UnsupportedCaseError(f"normal rotation needs a 2-dimensional complement, got k={frame.k}")
    w = np.asarray(w, dtype=float)
    tangential = frame.e @ w
    if np.max(np.abs(tangential), initial=0.0) > TANGENT_TOL * max(1.0, float(np.linalg.norm(w))):
        raise NotNormalError(
            f"vector has tangential component {np.max(np.abs(tangential)):.3e}"
        )
    c = frame.nu @ w
    # positive orientation of the full frame fixes the sign: J nu1 = +nu2
    return c[0] * frame.nu[1] - c[1] * frame.nu[0]


def jtilde_coeffs(coeffs) -> np.ndarray:
    """Complex structure on tangent coefficients: rotate the normal index."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.ndim != 2 or coeffs.shape[1] != 2:
        raise UnsupportedCaseError(
            f"complex structure needs (m, 2) coefficients, got shape {coeffs.shape}"
        )
    return np.stack([-coeffs[:, 1], coeffs[:, 0]], axis=1)


def random_adapted_frame(rng: np.random.Generator, m: int, n: int) -> AdaptedFrame:
    """Seeded random frame: QR of a Gaussian matrix, sign-fixed and oriented."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.sign(np.diag(r))  # deterministic QR representative
    if np.linalg.det(q) < 0:
        q[:, -1] = -q[:, -1]
    return AdaptedFrame(e=q[:, :m].T, nu=q[:, m:].T)


def frame_curve(seed: int, m: int, n: int):
    """Smooth curve t -> AdaptedFrame for finite-difference connection checks.

    Gram-Schmidt of a smooth invertible matrix family is smooth, so the
    returned callable samples a genuinely differentiable curve of adapted
    frames through t = 0.
    """
    rng = np.random.default_rng(seed)
    base = np.eye(n) + 0.25 * rng.standard_normal((n, n))
    if np.linalg.det(base) < 0:
        base[:, -1] = -base[:, -1]
    drift = 0.5 * rng.standard_normal((n, n))
    curl = 0.5 * rng.standard_normal((n, n))

    def at(t: float) -> AdaptedFrame:
        mat = base + np.sin(t) * drift + (1.0 - np.cos(t)) * curl
        q = _gram_schmidt_columns(mat)
        return AdaptedFrame(e=q[:, :m].T, nu=q[:, m:].T)

    return at


def _gram_schmidt_columns(mat: np.ndarray) -> np.ndarray:
    q = np.array(mat, dtype=float)
    n = q.shape[1]
    for j in range(n):
        for i in range(j):
            q[:, j] -= np.dot(q[:, i], q[:, j]) * q[:, i]
        nrm = np.linalg.norm(q[:, j])
        if nrm < 1e-12:
            raise FrameError("matrix columns are numerically dependent")
        q[:, j] /= nrm
    return q
