"""Closed-form oracles for Gaussian states, derived symbolically with sympy.

For rho0 = exp(-x^T A x) every integrand below is rho0 times a polynomial,
so integrals reduce to Gaussian moments taken from the moment generating
function exp(k^T Sigma k / 2) with Sigma = (2A)^-1.
"""

import sympy as sp

x1, x2, eps = sp.symbols("x1 x2 eps", real=True)
X = (x1, x2)


def grad(f):
    return [sp.diff(f, v) for v in X]


def div(v):
    return sum(sp.diff(vi, xi) for vi, xi in zip(v, X))


def lap(f):
    return div(grad(f))


def dot(a, b):
    return sum(ai * bi for ai, bi in zip(a, b))


def r_terms(rho, S):
    """The five R functionals of (rho, S) with j = rho grad S."""
    j = [rho * g for g in grad(S)]
    gr = grad(rho)
    return (
        div(j) / rho,
        lap(rho) / rho,
        dot(j, j) / rho**2,
        dot(j, gr) / rho**2,
        dot(gr, gr) / rho**2,
    )


def gaussian_expectation(poly, A):
    """E[poly] under the normalized density proportional to exp(-x^T A x)."""
    sigma = (2 * sp.Matrix(A)).inv()
    k = sp.symbols("k1 k2")
    kv = sp.Matrix(k)
    mgf = sp.exp((kv.T * sigma * kv)[0, 0] / 2)
    total = 0
    for (a, b), coeff in sp.Poly(sp.expand(poly), *X).terms():
        total += coeff * sp.diff(mgf, k[0], a, k[1], b).subs({k[0]: 0, k[1]: 0})
    return sp.nsimplify(sp.simplify(total))


def ess3(A, S, V, c):
    """-int rho0 d_1 [d/d eps R(rho0, S - eps V)] at eps = 0, for coefficients c."""
    rho = sp.exp(-sum(A[i][j] * X[i] * X[j] for i in range(2) for j in range(2)))
    R = sum(ci * ri for ci, ri in zip(c, r_terms(rho, S - eps * V)))
    dR = sp.diff(R, eps).subs(eps, 0)
    integrand = sp.simplify(-sp.diff(dR, x1))
    return gaussian_expectation(integrand, A)


def ess4_case1(A, S, V):
    """-int rho0 sum_i [lap, d_i V] d_i d_1 S."""
    rho = sp.exp(-sum(A[i][j] * X[i] * X[j] for i in range(2) for j in range(2)))
    gv = grad(V)
    u = grad(sp.diff(S, x1))
    integrand = -sum(lap(gv[i] * u[i]) - gv[i] * lap(u[i]) for i in range(2))
    return gaussian_expectation(sp.simplify(integrand), A)


def ess4_case2(A, V):
    """int ([lap, 1/rho0] d_1 rho0) div(rho0 grad V)."""
    rho = sp.exp(-sum(A[i][j] * X[i] * X[j] for i in range(2) for j in range(2)))
    d1 = sp.diff(rho, x1)
    comm = lap(d1 / rho) - lap(d1) / rho
    D = div([rho * g for g in grad(V)])
    integrand = sp.simplify(comm * D / rho)
    return gaussian_expectation(integrand, A)


PAPER_A = [[1, sp.Rational(1, 2)], [sp.Rational(1, 2), 1]]
