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
Spectral calculus of the discrete L_u: generalized eigendecomposition
K E = M E diag(lambda), fractional solves L_u^beta p = f, and the eigenvalue
growth diagnostics.
'''

import numpy
import scipy.linalg
from pyscf import __config__
from pyscf.qgraph.assembly import Field, as_coeffs

WEYL_FRACTION = getattr(__config__, 'qgraph_spectral_weyl_fraction', 0.5)
SIGN_TOL = getattr(__config__, 'qgraph_spectral_sign_tol', 1e-10)


class EigenBasis:
    '''M-orthonormal eigenpairs of (K, M), eigenvalues ascending.

    Attributes:
        eigenvalues : ndarray (n_dof,)
        vectors : ndarray (n_dof, n_dof)
            Columns are eigenvectors, E^T M E = I.
        op : OperatorPair
    '''
    def __init__(self, eigenvalues, vectors, op):
        self.eigenvalues = eigenvalues
        self.vectors = vectors
        self.op = op

    @property
    def mesh(self):
        return self.op.mesh

    def coefficients(self, f):
        '''Expansion coefficients f_j = e_j^T M f'''
        f = as_coeffs(f, self.mesh, 'f')
        return self.vectors.T @ (self.op.M @ f)

    def apply_power(self, x, power):
        '''E diag(lambda^power) E^T M x'''
        return self.vectors @ (self.eigenvalues**power * self.coefficients(x))

    def eigenfunction(self, j):
        return Field(self.mesh, self.vectors[:,j], 'eigen')


def _fix_sign(vectors):
    for k in range(vectors.shape[1]):
        col = vectors[:,k]
        nz = numpy.nonzero(abs(col) > SIGN_TOL * abs(col).max())[0]
        if nz.size and col[nz[0]] < 0:
            vectors[:,k] = -col
    return vectors


def eigendecompose(op):
    '''Dense generalized eigendecomposition of the operator pair'''
    K = op.K.toarray()
    M = op.M.toarray()
    try:
        w, v = scipy.linalg.eigh(K, M)
    except (ValueError, scipy.linalg.LinAlgError) as e:
        raise numpy.linalg.LinAlgError(f'generalized eigensolver failed: {e}')
    if not (numpy.isfinite(w).all() and numpy.isfinite(v).all()):
        raise numpy.linalg.LinAlgError('eigensolver returned non-finite eigenpairs')
    return EigenBasis(w, _fix_sign(v), op)


def eigenvalues(op):
    w = scipy.linalg.eigh(op.K.toarray(), op.M.toarray(), eigvals_only=True)
    if not numpy.isfinite(w).all():
        raise numpy.linalg.LinAlgError('eigensolver returned non-finite eigenvalues')
    return w


def solve_fractional(basis, f, beta):
    '''p = E diag(lambda^-beta) E^T M f, exact for the discrete operator'''
    if not beta >= 1:
        raise ValueError(f'fractional order beta must be >= 1, got {beta}')
    return Field(basis.mesh, basis.apply_power(f, -float(beta)), 'p')


def weyl_ratio(basis, u, fraction=WEYL_FRACTION):
    '''Empirical Weyl bracket over the lower part of the spectrum.

    Returns:
        (min_j lambda_j e^{|u|_inf} / j^2,  max_j lambda_j e^{-|u|_inf} / j^2)
    '''
    unorm = float(abs(as_coeffs(u, basis.mesh, 'u')).max())
    ratios = weyl_ratios(basis.eigenvalues, fraction)
    return (float(ratios.min() * numpy.exp(unorm)),
            float(ratios.max() * numpy.exp(-unorm)))


def weyl_ratios(eigenvalues, fraction=WEYL_FRACTION):
    '''lambda_j / j^2 for the retained lower part of the spectrum'''
    nkeep = max(1, int(len(eigenvalues) * fraction))
    j = numpy.arange(1, nkeep + 1)
    return eigenvalues[:nkeep] / j**2


def eigen_perturbation_check(op1, op2, u1, u2, s):
    '''Empirical constant of the eigenvalue perturbation bound

        max_j |lambda1_j^-s - lambda2_j^-s| / (exp((s+2) max|u_i|_inf) |u1 - u2|_inf)

    Returns 0 for |u1 - u2|_inf < 1e-14.
    '''
    if s < 0:
        raise ValueError(f'perturbation exponent s must be >= 0, got {s}')
    if not op1.mesh.same_as(op2.mesh):
        raise ValueError('operators are assembled on different meshes')
    u1 = as_coeffs(u1, op1.mesh, 'u1')
    u2 = as_coeffs(u2, op2.mesh, 'u2')
    du = abs(u1 - u2).max()
    if du < 1e-14:
        return 0.
    lam1 = eigenvalues(op1)
    lam2 = eigenvalues(op2)
    unorm = max(abs(u1).max(), abs(u2).max())
    diff = abs(lam1**-s - lam2**-s).max()
    return float(diff / (numpy.exp((s + 2) * unorm) * du))
