"""Dense exterior algebra Lambda^p R^n.

A p-vector is stored as a dense coefficient array over the lexicographically
ordered p-element subsets of {1, ..., n}.  That basis is orthonormal for the
metric induced from R^n, so inner products are plain dot products of
coefficient arrays.  Dimensions are capped at n <= 6 (at most C(6,3) = 20
coefficients), which covers every Grassmannian used downstream; sparse
storage would buy nothing at this scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np

from .errors import UnsupportedCaseError

MAX_AMBIENT_DIM = 6


@lru_cache(maxsize=None)
def index_sets(degree: int, n: int) -> tuple[tuple[int, ...], ...]:
    """All degree-element subsets of {1..n} in lexicographic order."""
    return tuple(combinations(range(1, n + 1), degree))


@lru_cache(maxsize=None)
def _ordinal_of(degree: int, n: int) -> dict[tuple[int, ...], int]:
    return {s: i for i, s in enumerate(index_sets(degree, n))}


@dataclass(frozen=True)
class MultiIndex:
    """One basis subset of Lambda^p R^n with its lexicographic position."""

    n: int
    degree: int
    members: tuple[int, ...]
    ordinal: int

    def __post_init__(self):
        if len(self.members) != self.degree:
            raise ValueError("member count does not match degree")
        if any(b <= a for a, b in zip(self.members, self.members[1:])):
            raise ValueError(f"members must be strictly increasing, got {self.members}")
        if self.members and not (1 <= self.members[0] and self.members[-1] <= self.n):
            raise ValueError(f"members must lie in [1..{self.n}]")
        if index_sets(self.degree, self.n)[self.ordinal] != self.members:
            raise ValueError("ordinal does not match members")

    @classmethod
    def from_members(cls, members, n: int) -> "MultiIndex":
        members = tuple(members)
        table = _ordinal_of(len(members), n)
        if members not in table:
            raise ValueError(f"not a strictly increasing subset of [1..{n}]: {members}")
        return cls(n=n, degree=len(members), members=members, ordinal=table[members])

    @classmethod
    def from_ordinal(cls, ordinal: int, degree: int, n: int) -> "MultiIndex":
        members = index_sets(degree, n)[ordinal]
        return cls(n=n, degree=degree, members=members, ordinal=ordinal)


class MultiVector:
    """Element of Lambda^p R^n as a dense coefficient vector."""

    __slots__ = ("n", "degree", "coeffs")

    def __init__(self, n: int, degree: int, coeffs):
        if not (0 <= degree <= n):
            raise ValueError(f"degree {degree} out of range for n={n}")
        if n > MAX_AMBIENT_DIM:
            raise UnsupportedCaseError(f"ambient dimension {n} > {MAX_AMBIENT_DIM}")
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (comb(n, degree),):
            raise ValueError(
                f"need {comb(n, degree)} coefficients for degree {degree} in R^{n}, "
                f"got shape {coeffs.shape}"
            )
        self.n = n
        self.degree = degree
        self.coeffs = coeffs

    @classmethod
    def zero(cls, n: int, degree: int) -> "MultiVector":
        return cls(n, degree, np.zeros(comb(n, degree)))

    @classmethod
    def from_vector(cls, v) -> "MultiVector":
        """Degree-1 multivector from an ordinary vector."""
        v = np.asarray(v, dtype=float)
        return cls(v.shape[0], 1, v.copy())

    def coeff(self, members) -> float:
        """Coefficient on the basis subset given by 1-based members."""
        return float(self.coeffs[_ordinal_of(self.degree, self.n)[tuple(members)]])

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    # arithmetic is handy for finite differences of Grassmann points
    def __add__(self, other: "MultiVector") -> "MultiVector":
        self._check_compatible(other)
        return MultiVector(self.n, self.degree, self.coeffs + other.coeffs)

    def __sub__(self, other: "MultiVector") -> "MultiVector":
        self._check_compatible(other)
        return MultiVector(self.n, self.degree, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "MultiVector":
        return MultiVector(self.n, self.degree, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> "MultiVector":
        return MultiVector(self.n, self.degree, self.coeffs / float(scalar))

    def __neg__(self) -> "MultiVector":
        return MultiVector(self.n, self.degree, -self.coeffs)

    def _check_compatible(self, other: "MultiVector"):
        if self.n != other.n or self.degree != other.degree:
            raise ValueError(
                f"incompatible multivectors: (n={self.n}, p={self.degree}) vs "
                f"(n={other.n}, p={other.degree})"
            )

    def __repr__(self):
        return f"MultiVector(n={self.n}, degree={self.degree}, coeffs={self.coeffs!r})"


def wedge_vectors(vectors) -> MultiVector:
    """Wedge product v_1 ^ ... ^ v_m of ordinary vectors.

    The coefficient on the subset S is the m x m minor of the row matrix of
    the inputs taken on the columns S; sorting a wedge word into the
    lexicographic basis contributes the permutation sign.
    """
    mat = np.asarray(vectors, dtype=float)
    if mat.ndim != 2:
        raise ValueError("expected a list of equal-length vectors")
    m, n = mat.shape
    if m > n:
        raise ValueError(f"cannot wedge {m} vectors in R^{n}")
    sets = index_sets(m, n)
    coeffs = np.empty(len(sets))
    for k, members in enumerate(sets):
        cols = [j - 1 for j in members]
        coeffs[k] = np.linalg.det(mat[:, cols]) if m > 1 else mat[0, cols[0]]
    return MultiVector(n, m, coeffs)


@lru_cache(maxsize=None)
def _wedge_table(p: int, q: int, n: int):
    """Triples (i, j, k, sign) with e_{S_i} ^ e_{T_j} = sign * e_{R_k}."""
    rank = _ordinal_of(p + q, n)
    table = []
    for i, s in enumerate(index_sets(p, n)):
        s_set = set(s)
        for j, t in enumerate(index_sets(q, n)):
            if s_set & set(t):
                continue
            inversions = sum(1 for a in s for b in t if a > b)
            sign = -1.0 if inversions % 2 else 1.0
            table.append((i, j, rank[tuple(sorted(s + t))], sign))
    return tuple(table)


def wedge(a: MultiVector, b: MultiVector) -> MultiVector:
    """Bilinear graded-anticommutative product Lambda^p x Lambda^q -> Lambda^{p+q}."""
    if a.n != b.n:
        raise ValueError(f"ambient dimension mismatch: {a.n} vs {b.n}")
    if a.degree + b.degree > a.n:
        raise ValueError(
            f"degree overflow: {a.degree} + {b.degree} > {a.n}"
        )
    out = np.zeros(comb(a.n, a.degree + b.degree))
    for i, j, k, sign in _wedge_table(a.degree, b.degree, a.n):
        out[k] += sign * a.coeffs[i] * b.coeffs[j]
    return MultiVector(a.n, a.degree + b.degree, out)


def inner(a: MultiVector, b: MultiVector) -> float:
    """Metric induced from R^n; the lexicographic basis is orthonormal."""
    if a.n != b.n or a.degree != b.degree:
        raise ValueError(
            f"inner product needs matching (n, degree): "
            f"({a.n}, {a.degree}) vs ({b.n}, {b.degree})"
        )
    return float(np.dot(a.coeffs, b.coeffs))


def simplicity_residual(a: MultiVector) -> float:
    """|p12 p34 - p13 p24 + p14 p23| for a 2-vector in R^4; 0 iff simple."""
    if a.degree != 2 or a.n != 4:
        raise UnsupportedCaseError(
            f"simplicity test only implemented for degree 2 in R^4, "
            f"got degree {a.degree} in R^{a.n}"
        )
    c = a.coeffs  # lex order: 12, 13, 14, 23, 24, 34
    return float(abs(c[0] * c[5] - c[1] * c[4] + c[2] * c[3]))
