"""Tour of the dense exterior algebra: wedges, the induced metric, and the
simplicity test that characterizes decomposable 2-vectors in R^4.

Run:  python3 demos/01_exterior_algebra.py
"""

import numpy as np

from skewflow import MultiVector, inner, simplicity_residual, wedge, wedge_vectors

rng = np.random.default_rng(0)

print("== wedge products ==")
e = np.eye(4)
w = wedge_vectors([e[0], e[1]])
print("e1 ^ e2 coefficients (lex pairs 12,13,14,23,24,34):", w.coeffs)
print("e3 ^ e2 picks up one transposition sign:",
      wedge(MultiVector.from_vector(e[2]), MultiVector.from_vector(e[1])).coeffs)

u, v = rng.standard_normal(4), rng.standard_normal(4)
uv = wedge_vectors([u, v])
vu = wedge_vectors([v, u])
print("antisymmetry, max |u^v + v^u| =", np.max(np.abs(uv.coeffs + vu.coeffs)))

print("\n== the induced metric is the Gram determinant on simple vectors ==")
gram = np.array([[u @ u, u @ v], [v @ u, v @ v]])
print("inner(u^v, u^v) =", inner(uv, uv))
print("det of the Gram matrix =", np.linalg.det(gram))

print("\n== simplicity: which 2-vectors are actual planes? ==")
print("residual of u ^ v (a plane):        %.3e" % simplicity_residual(uv))
mixed = wedge_vectors([e[0], e[1]]) + wedge_vectors([e[2], e[3]])
print("residual of e12 + e34 (not simple): %.3e" % simplicity_residual(mixed))

print("\nunit simple 2-vectors in R^4 are exactly the oriented tangent planes")
print("a surface can have; they form the target of the Gauss map downstream.")
