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
Linear finite elements for L_u = kappa^2 - div(e^u grad) on a metric graph.

Kirchhoff vertex conditions are natural in the Galerkin form; continuity
comes from the shared vertex DOFs of the mesh, so no vertex terms are
assembled.
'''

import numpy
import scipy.sparse
import scipy.sparse.linalg
from pyscf.lib import logger

ROLES = ('u', 'p', 'f', 'eigen', 'std', 'var', 'diff')


class Field:
    '''Piecewise-linear function on a mesh, stored as nodal coefficients.

    ``role`` tags what the field holds: u (log-diffusion parameter),
    p (PDE solution), f (source), eigen (eigenfunction), or one of the
    summary tags std/var/diff.
    '''
    __slots__ = ('mesh', 'values', 'role')

    def __init__(self, mesh, values, role='u'):
        values = numpy.array(values, dtype=float).ravel()
        if values.size != mesh.n_dof:
            raise ValueError(f'{role} field has {values.size} coefficients; '
                             f'the mesh has {mesh.n_dof} DOFs')
        if not numpy.isfinite(values).all():
            raise ValueError(f'{role} field has non-finite coefficients')
        self.mesh = mesh
        self.values = values
        self.role = role

    def copy(self):
        return Field(self.mesh, self.values.copy(), self.role)

    def norm_inf(self):
        return float(abs(self.values).max())

    def __len__(self):
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.values
        return self.values.astype(dtype)

    def __repr__(self):
        return f'<Field {self.role} n_dof={self.values.size}>'


def as_coeffs(x, mesh, name='field'):
    '''Coefficient vector of a Field or array, checked against the mesh'''
    if isinstance(x, Field):
        if not x.mesh.same_as(mesh):
            raise ValueError(f'{name} is defined on a different mesh')
        return x.values
    x = numpy.asarray(x, dtype=float).ravel()
    if x.size != mesh.n_dof:
        raise ValueError(f'{name} has {x.size} coefficients; the mesh has '
                         f'{mesh.n_dof} DOFs')
    return x


def constant_field(mesh, c, role='u'):
    return Field(mesh, numpy.full(mesh.n_dof, float(c)), role)


def _element_matrix(mesh, blocks):
    '''Scatter per-element 2x2 blocks, shape (nelem, 2, 2), into a CSC matrix'''
    dofs = mesh.elem_dofs
    rows = numpy.repeat(dofs, 2, axis=1).ravel()
    cols = numpy.tile(dofs, (1, 2)).ravel()
    n = mesh.n_dof
    mat = scipy.sparse.coo_matrix((blocks.ravel(), (rows, cols)), shape=(n, n))
    return mat.tocsc()


def assemble_mass(mesh):
    '''Linear-element mass matrix; vertex rows collect every incident edge'''
    w = mesh.elem_width
    blocks = numpy.empty((mesh.nelem, 2, 2))
    blocks[:, 0, 0] = blocks[:, 1, 1] = w / 3
    blocks[:, 0, 1] = blocks[:, 1, 0] = w / 6
    return _element_matrix(mesh, blocks)


def element_coefficient(mesh, u):
    '''e^u at element midpoints, u interpolated linearly'''
    u = as_coeffs(u, mesh, 'u')
    i, j = mesh.elem_dofs.T
    return numpy.exp(.5 * (u[i] + u[j]))


def assemble_diffusion(mesh, coef):
    '''Pure stiffness matrix A(c) for per-element coefficients c'''
    c = numpy.broadcast_to(numpy.asarray(coef, dtype=float), (mesh.nelem,))
    s = c / mesh.elem_width
    blocks = numpy.empty((mesh.nelem, 2, 2))
    blocks[:, 0, 0] = blocks[:, 1, 1] = s
    blocks[:, 0, 1] = blocks[:, 1, 0] = -s
    return _element_matrix(mesh, blocks)


class OperatorPair:
    '''Mass matrix M and K = A(e^u) + kappa^2 M of the discrete L_u.

    Attributes:
        M, K : scipy.sparse.csc_matrix
        A : scipy.sparse.csc_matrix
            Pure stiffness part K - kappa^2 M.
        kappa : float
        u : Field
    '''
    def __init__(self, mesh, M, A, kappa, u=None):
        self.mesh = mesh
        self.M = M
        self.A = A
        self.kappa = float(kappa)
        self.K = (A + self.kappa**2 * M).tocsc()
        self.u = u
        self._lu = None

    @property
    def n_dof(self):
        return self.mesh.n_dof

    def factorize(self):
        '''Sparse LU of K with symmetric pivoting.  Positive pivots are
        checked, which for symmetric K is equivalent to K being SPD.'''
        if self._lu is None:
            try:
                lu = scipy.sparse.linalg.splu(
                    self.K, permc_spec='MMD_AT_PLUS_A', diag_pivot_thresh=0.,
                    options={'SymmetricMode': True})
            except RuntimeError as e:
                raise numpy.linalg.LinAlgError(f'factorization of K failed: {e}')
            piv = lu.U.diagonal()
            if not (numpy.isfinite(piv).all() and (piv > 0).all()):
                raise numpy.linalg.LinAlgError(
                    'K is not symmetric positive definite (non-positive pivot '
                    f'{piv.min():.3e})')
            self._lu = lu
        return self._lu


def assemble_stiffness(mesh, u, kappa):
    '''OperatorPair for K = A(e^u) + kappa^2 M with the element coefficient
    evaluated at element midpoints'''
    if not kappa > 0:
        raise ValueError(f'kappa must be positive, got {kappa}')
    if not isinstance(u, Field):
        u = Field(mesh, as_coeffs(u, mesh, 'u'), 'u')
    else:
        as_coeffs(u, mesh, 'u')
    M = assemble_mass(mesh)
    A = assemble_diffusion(mesh, element_coefficient(mesh, u))
    return OperatorPair(mesh, M, A, kappa, u)


def solve_elliptic(op, f, verbose=logger.WARN):
    '''Galerkin solution of L_u p = f, i.e. K p = M f

    ``verbose`` is a verbosity level or a Logger of the calling object.
    '''
    f = as_coeffs(f, op.mesh, 'f')
    rhs = op.M @ f
    lu = op.factorize()
    p = lu.solve(rhs)
    if not numpy.isfinite(p).all():
        raise numpy.linalg.LinAlgError('elliptic solve produced non-finite values')
    log = logger.new_logger(verbose=verbose)
    if log.verbose >= logger.DEBUG:
        res = numpy.linalg.norm(op.K @ p - rhs)
        log.debug('elliptic solve residual |Kp - Mf| = %.3e (|Mf| = %.3e)',
                  res, numpy.linalg.norm(rhs))
    return Field(op.mesh, p, 'p')


def l2_norm(mesh, p, M=None):
    p = as_coeffs(p, mesh)
    if M is None:
        M = assemble_mass(mesh)
    return float(numpy.sqrt(max(p @ (M @ p), 0.)))


def h1_norm(mesh, p, M=None):
    '''Discrete H1 norm sqrt(p^T (A(1) + M) p)'''
    p = as_coeffs(p, mesh)
    if M is None:
        M = assemble_mass(mesh)
    A = assemble_diffusion(mesh, 1.)
    return float(numpy.sqrt(max(p @ (A @ p) + p @ (M @ p), 0.)))


def h1_seminorm(mesh, p):
    p = as_coeffs(p, mesh)
    A = assemble_diffusion(mesh, 1.)
    return float(numpy.sqrt(max(p @ (A @ p), 0.)))
