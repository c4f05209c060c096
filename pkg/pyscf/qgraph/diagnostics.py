#!/usr/bin/env python
# Copyright 2025 The PySCF Developers. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
#

'''
Numerical property checks of the discretization, the spectral calculus and
the prior.  Every function returns plain numbers; tolerances are applied by
the caller.
'''

import math
import numpy
import scipy.linalg
from pyscf.qgraph import graph as graph_mod
from pyscf.qgraph.assembly import (Field, as_coeffs, assemble_mass,
                                   assemble_stiffness, constant_field,
                                   solve_elliptic, l2_norm, h1_norm)
from pyscf.qgraph.spectral import eigendecompose, solve_fractional, weyl_ratio


def m_norm(M, x):
    return math.sqrt(max(float(x @ (M @ x)), 0.))

def relative_m_error(M, x, ref):
    x = numpy.asarray(x)
    ref = numpy.asarray(ref)
    return m_norm(M, x - ref) / max(m_norm(M, ref), 1e-300)


def mass_total(mesh):
    '''Sum of all mass matrix entries, equal to the total graph length'''
    return float(assemble_mass(mesh).sum())


def dof_sharing(mesh):
    '''True if every edge end node maps onto the DOF of its vertex'''
    g = mesh.graph
    for k, dofs in enumerate(mesh.dofmap):
        if dofs[0] != g.edges[k, 0] or dofs[-1] != g.edges[k, 1]:
            return False
    return True


def energy_identity(op, f):
    '''Relative gap |p^T K p - p^T M f| / |p^T M f| of the elliptic solution'''
    p = solve_elliptic(op, f).values
    f = as_coeffs(f, op.mesh, 'f')
    lhs = p @ (op.K @ p)
    rhs = p @ (op.M @ f)
    return abs(lhs - rhs) / max(abs(rhs), 1e-300)


def route_equivalence(fwd, u):
    '''M-norm relative difference between the sparse beta = 1 solve and the
    spectral solve of the same operator'''
    op = fwd.operator(u)
    p_ell = solve_elliptic(op, fwd.f).values
    p_eig = solve_fractional(eigendecompose(op), fwd.f, 1.).values
    return relative_m_error(op.M, p_eig, p_ell)


def double_solve_equivalence(op, f):
    '''beta = 2 spectral solve against two consecutive elliptic solves'''
    p1 = solve_elliptic(op, f)
    p2 = solve_elliptic(op, p1).values
    p_eig = solve_fractional(eigendecompose(op), f, 2.).values
    return relative_m_error(op.M, p_eig, p2)


def lambda1_error(op):
    '''|lambda_1 - kappa^2|'''
    basis = eigendecompose(op)
    return abs(basis.eigenvalues[0] - op.kappa**2)


def parseval(basis, f):
    '''Relative gap between sum_j f_j^2 and f^T M f'''
    f = as_coeffs(f, basis.mesh, 'f')
    c = basis.coefficients(f)
    ref = f @ (basis.op.M @ f)
    return abs(c @ c - ref) / max(abs(ref), 1e-300)


def orthonormality(basis):
    '''max |E^T M E - I|'''
    E = basis.vectors
    return float(abs(E.T @ (basis.op.M @ E) - numpy.eye(E.shape[1])).max())


def prior_covariance_routes(prior):
    '''Frobenius-relative difference of K0^-1 M K0^-1 and the eigenbasis
    covariance at alpha = 1'''
    if prior.alpha != 1:
        raise ValueError('covariance route comparison needs alpha = 1')
    c_direct = prior.covariance('direct')
    c_eig = prior.covariance('spectral')
    return float(numpy.linalg.norm(c_direct - c_eig) / numpy.linalg.norm(c_direct))


def stability_ratio(mesh, kappa, f, u_values, beta=1.):
    '''|p|_H1 / (e^{beta |u|_inf} |f|_L2) for constant fields u = c'''
    f = as_coeffs(f, mesh, 'f')
    fnorm = l2_norm(mesh, f)
    ratios = []
    for c in u_values:
        op = assemble_stiffness(mesh, constant_field(mesh, c), kappa)
        if beta == 1:
            p = solve_elliptic(op, f)
        else:
            p = solve_fractional(eigendecompose(op), f, beta)
        ratios.append(h1_norm(mesh, p, op.M) / (math.exp(beta * abs(c)) * fnorm))
    return numpy.array(ratios)


def forward_lipschitz(fwd, obs, pairs):
    '''max over pairs of |G(u1) - G(u2)| / (exp((beta+2) max|u_i|_inf) |u1 - u2|_inf)'''
    cmax = 0.
    for u1, u2 in pairs:
        u1 = as_coeffs(u1, fwd.mesh, 'u1')
        u2 = as_coeffs(u2, fwd.mesh, 'u2')
        du = abs(u1 - u2).max()
        if du < 1e-14:
            continue
        g1 = obs.H @ fwd.solve(u1).values
        g2 = obs.H @ fwd.solve(u2).values
        scale = math.exp((fwd.beta + 2) * max(abs(u1).max(), abs(u2).max()))
        cmax = max(cmax, numpy.linalg.norm(g1 - g2) / (scale * du))
    return cmax


def lipschitz_bound(fwd, obs=None):
    '''Discrete constant C of the solution-map stability bounds at beta = 1
    and kappa >= 1.

        |F(u1) - F(u2)|_H1 <= C exp(3 m) |u1 - u2|_inf,  C = |f|_L2
        |G(u1) - G(u2)|    <= C exp(3 m) |u1 - u2|_inf,  C = |H|_2 |f|_L2 / sqrt(lambda_min(M))

    with m = max |u_i|_inf.  The first form is returned when ``obs`` is None.
    '''
    if fwd.beta != 1:
        raise ValueError('the stability constant is derived for beta = 1')
    if fwd.kappa < 1:
        raise ValueError('the stability constant is derived for kappa >= 1')
    M = assemble_mass(fwd.mesh)
    c = l2_norm(fwd.mesh, fwd.f, M)
    if obs is None:
        return c
    hnorm = numpy.linalg.norm(obs.H.toarray(), 2) if obs.m else 0.
    lam_min = scipy.linalg.eigvalsh(M.toarray())[0]
    return float(hnorm * c / math.sqrt(lam_min))


def solution_lipschitz(mesh, kappa, f, pairs):
    '''max over pairs of |F(u1) - F(u2)|_H1 / (exp(3 max|u_i|_inf) |u1 - u2|_inf)'''
    cmax = 0.
    for u1, u2 in pairs:
        u1 = as_coeffs(u1, mesh, 'u1')
        u2 = as_coeffs(u2, mesh, 'u2')
        du = abs(u1 - u2).max()
        if du < 1e-14:
            continue
        p1 = solve_elliptic(assemble_stiffness(mesh, u1, kappa), f).values
        p2 = solve_elliptic(assemble_stiffness(mesh, u2, kappa), f).values
        scale = math.exp(3 * max(abs(u1).max(), abs(u2).max()))
        cmax = max(cmax, h1_norm(mesh, p1 - p2) / (scale * du))
    return cmax


def weyl_bracket(mesh, kappa, u_values):
    '''Weyl brackets for constant u = c.

    Returns:
        ndarray of rows (c, lower, upper)
    '''
    rows = []
    for c in u_values:
        u = constant_field(mesh, c)
        basis = eigendecompose(assemble_stiffness(mesh, u, kappa))
        rows.append((c,) + weyl_ratio(basis, u))
    return numpy.array(rows)


def interval_solution_error(h, kappa=1.):
    '''L2 error of the FEM solution of kappa^2 p - p'' = cos(pi x) on [0, 1]
    against cos(pi x)/(kappa^2 + pi^2)'''
    mesh = graph_mod.build_mesh(graph_mod.interval(1.), h)
    x = mesh.coords[:,0]
    f = Field(mesh, numpy.cos(numpy.pi * x), 'f')
    op = assemble_stiffness(mesh, constant_field(mesh, 0.), kappa)
    p = solve_elliptic(op, f).values
    exact = numpy.cos(numpy.pi * x) / (kappa**2 + numpy.pi**2)
    return l2_norm(mesh, p - exact, op.M)


def mesh_convergence(h=.01, nrefine=2, kappa=1.):
    '''Errors and observed orders of the interval cos(pi x) solution under
    h -> h/2 refinements'''
    hs = [h / 2**k for k in range(nrefine + 1)]
    errors = numpy.array([interval_solution_error(hk, kappa) for hk in hs])
    orders = numpy.log2(errors[:-1] / errors[1:])
    return numpy.array(hs), errors, orders
