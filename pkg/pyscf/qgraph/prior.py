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
Whittle-Matern Gaussian prior on a metric graph

The prior is the law of the solution of

    (kappa0^2 - div(a grad))^alpha u = W

with Gaussian white noise W.  Discrete white noise has covariance M.  For
alpha = 1 a draw solves K0 u = L xi with L L^T = M; for general alpha the
draw is expanded in the M-orthonormal eigenbasis of (K0, M).
'''

import math
import numpy
import scipy.linalg
from pyscf import lib
from pyscf import __config__
from pyscf.lib import logger
from pyscf.qgraph.assembly import (Field, as_coeffs, assemble_stiffness,
                                   constant_field)
from pyscf.qgraph.spectral import eigendecompose

KAPPA0 = getattr(__config__, 'qgraph_prior_kappa0', math.sqrt(0.2) * 2 / 3)
DIFFUSION = getattr(__config__, 'qgraph_prior_a', 0.2)
ALPHA = getattr(__config__, 'qgraph_prior_alpha', 1.)


class WhittleMaternPrior(lib.StreamObject):
    '''Whittle-Matern prior with constant (kappa0, a, alpha).

    Attributes:
        kappa0 : float
            Inverse correlation length, > 0.
        a : float
            Diffusion coefficient, > 0.
        alpha : float
            Smoothness exponent, > 3/4.  alpha >= 1 is needed for inversion.
        route : str
            Sampling route for alpha = 1, 'direct' (sparse solve with K0) or
            'spectral'.  Other alpha always use the spectral route.
    '''
    _keys = {'mesh', 'kappa0', 'a', 'alpha', 'route', 'verbose', 'stdout'}

    kappa0 = KAPPA0
    a = DIFFUSION
    alpha = ALPHA
    route = 'direct'

    def __init__(self, mesh, kappa0=None, a=None, alpha=None, verbose=None):
        self.mesh = mesh
        self.verbose = getattr(__config__, 'qgraph_verbose', logger.NOTE) \
                if verbose is None else verbose
        self.stdout = lib.StreamObject.stdout
        if kappa0 is not None:
            self.kappa0 = kappa0
        if a is not None:
            self.a = a
        if alpha is not None:
            self.alpha = alpha
        self.check_sanity()
        self._op0 = None
        self._mass_chol = None
        self._basis = None

    def check_sanity(self):
        if not self.kappa0 > 0:
            raise ValueError(f'prior kappa0 must be positive, got {self.kappa0}')
        if not self.a > 0:
            raise ValueError(f'prior diffusion a must be positive, got {self.a}')
        if not self.alpha > .75:
            raise ValueError(f'prior alpha must exceed 3/4, got {self.alpha}')
        if self.route not in ('direct', 'spectral'):
            raise ValueError(f'unknown prior sampling route {self.route!r}')
        return self

    def check_inversion(self):
        '''alpha >= 1 is required when the prior is used for inversion'''
        if self.alpha < 1:
            raise ValueError(f'an inversion prior needs alpha >= 1, got {self.alpha}')
        return self

    def dump_flags(self, verbose=None):
        log = logger.new_logger(self, verbose)
        if log.verbose < logger.INFO:
            return self
        log.info('\n')
        log.info('******** %s ********', self.__class__)
        log.info('kappa0 = %g', self.kappa0)
        log.info('a = %g', self.a)
        log.info('alpha = %g', self.alpha)
        log.info('sampling route = %s', self.route)
        log.info('n_dof = %d', self.mesh.n_dof)
        return self

    @property
    def op0(self):
        '''K0 = a A(1) + kappa0^2 M, built as A(e^{log a})'''
        if self._op0 is None:
            self._op0 = assemble_stiffness(
                self.mesh, constant_field(self.mesh, math.log(self.a)), self.kappa0)
        return self._op0

    @property
    def mass_chol(self):
        '''Lower Cholesky factor L of M'''
        if self._mass_chol is None:
            self._mass_chol = scipy.linalg.cholesky(self.op0.M.toarray(), lower=True)
        return self._mass_chol

    @property
    def basis(self):
        if self._basis is None:
            t0 = (logger.process_clock(), logger.perf_counter())
            self._basis = eigendecompose(self.op0)
            logger.timer(self, 'prior eigenbasis', *t0)
        return self._basis

    def _use_direct(self, route=None):
        route = route or self.route
        return self.alpha == 1 and route == 'direct'

    def build(self):
        '''Populate the cached factors before sharing the object across chains'''
        if self._use_direct():
            self.op0.factorize()
            self.mass_chol
        else:
            self.basis
        return self

    def sample(self, rng, route=None):
        '''One prior draw.  ``rng`` is a numpy Generator or an integer seed.'''
        if not isinstance(rng, numpy.random.Generator):
            rng = numpy.random.default_rng(rng)
        xi = rng.standard_normal(self.mesh.n_dof)
        return Field(self.mesh, self.transform_noise(xi, route), 'u')

    def transform_noise(self, xi, route=None):
        '''Map standard normal xi to a prior draw'''
        if self._use_direct(route):
            return self.op0.factorize().solve(self.mass_chol @ xi)
        basis = self.basis
        return basis.vectors @ (basis.eigenvalues**-self.alpha * xi)

    def precision_quadratic(self, u):
        '''1/2 u^T Q0 u'''
        u = as_coeffs(u, self.mesh, 'u')
        if self.alpha == 1:
            w = scipy.linalg.solve_triangular(self.mass_chol, self.op0.K @ u,
                                              lower=True)
        else:
            basis = self.basis
            w = basis.eigenvalues**self.alpha * basis.coefficients(u)
        return .5 * float(w @ w)

    def precision_action(self, u):
        '''Q0 u'''
        u = as_coeffs(u, self.mesh, 'u')
        if self.alpha == 1:
            K0 = self.op0.K
            Ku = K0 @ u
            return K0 @ scipy.linalg.cho_solve((self.mass_chol, True), Ku)
        basis = self.basis
        c = basis.eigenvalues**(2*self.alpha) * basis.coefficients(u)
        # E^{-T} = M E
        return self.op0.M @ (basis.vectors @ c)

    def covariance(self, route=None):
        '''Dense prior covariance C0 = Q0^{-1}'''
        if self._use_direct(route):
            S = self.op0.factorize().solve(self.mass_chol)
            return S @ S.T
        basis = self.basis
        E = basis.vectors * basis.eigenvalues**-self.alpha
        return E @ E.T

    def covariance_diag(self):
        '''Marginal prior variances diag(C0)'''
        if self._use_direct():
            S = self.op0.factorize().solve(self.mass_chol)
        else:
            basis = self.basis
            S = basis.vectors * basis.eigenvalues**-self.alpha
        var = numpy.einsum('ij,ij->i', S, S)
        assert (var > 0).all()
        return Field(self.mesh, var, 'var')

PriorSpec = WhittleMaternPrior


def sample_prior(prior, rng_seed, route=None):
    return prior.sample(rng_seed, route)

def prior_precision_quadratic(prior, u):
    return prior.precision_quadratic(u)

def covariance_diag(prior):
    return prior.covariance_diag()
