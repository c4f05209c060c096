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
Forward model G = Q o F: the map u -> p solving L_u^beta p = f followed by
linear observation functionals, the data misfit potential and synthetic data.
'''

import os
from collections import namedtuple
import numpy
import scipy.sparse
import scipy.linalg
from pyscf import lib
from pyscf import __config__
from pyscf.lib import logger
from pyscf.qgraph.assembly import (Field, as_coeffs, assemble_stiffness,
                                   solve_elliptic)
from pyscf.qgraph.spectral import eigendecompose, solve_fractional

KAPPA = getattr(__config__, 'qgraph_forward_kappa', 1.)
BETA = getattr(__config__, 'qgraph_forward_beta', 1.)
NOISE_REL = getattr(__config__, 'qgraph_forward_n_rel', .05)
NOISE_ABS = getattr(__config__, 'qgraph_forward_n_abs', .10)


def make_source(mesh, kind='z1sq_minus_z2sq'):
    '''Source term f.  ``kind`` is 'z1sq_minus_z2sq' (f = z1^2 - z2^2 at the
    embedded node coordinates), 'constant' (f = 1) or a Field CSV file.'''
    if isinstance(kind, Field):
        return Field(mesh, as_coeffs(kind, mesh, 'f'), 'f')
    if kind == 'z1sq_minus_z2sq':
        z = mesh.coords
        return Field(mesh, z[:,0]**2 - z[:,1]**2, 'f')
    if kind == 'constant':
        return Field(mesh, numpy.ones(mesh.n_dof), 'f')
    if isinstance(kind, str) and os.path.isfile(kind):
        from pyscf.qgraph import csvfile
        f = csvfile.read_field(kind, mesh)
        f.role = 'f'
        return f
    raise ValueError(f'unknown source {kind!r}')


class ForwardModel(lib.StreamObject):
    '''Forward map u -> p for L_u^beta p = f.

    beta = 1 is solved with a sparse factorization of K; beta > 1 with the
    dense eigenbasis of (K, M).  ``nsolve`` counts forward solves.
    '''
    _keys = {'mesh', 'kappa', 'beta', 'f', 'route', 'nsolve', 'verbose', 'stdout'}

    kappa = KAPPA
    beta = BETA
    # 'auto' picks the sparse route at beta = 1; 'spectral' forces the eigenbasis
    route = 'auto'

    def __init__(self, mesh, f, kappa=None, beta=None, verbose=None):
        self.mesh = mesh
        self.verbose = getattr(__config__, 'qgraph_verbose', logger.NOTE) \
                if verbose is None else verbose
        self.stdout = lib.StreamObject.stdout
        if kappa is not None:
            self.kappa = kappa
        if beta is not None:
            self.beta = beta
        if not isinstance(f, Field):
            f = Field(mesh, f, 'f')
        self.f = Field(mesh, as_coeffs(f, mesh, 'f'), 'f')
        self.nsolve = 0
        self.check_sanity()

    def check_sanity(self):
        if not self.kappa > 0:
            raise ValueError(f'kappa must be positive, got {self.kappa}')
        if not self.beta >= 1:
            raise ValueError(f'beta must be >= 1, got {self.beta}')
        if self.route not in ('auto', 'spectral'):
            raise ValueError(f'unknown forward route {self.route!r}')
        return self

    def dump_flags(self, verbose=None):
        log = logger.new_logger(self, verbose)
        if log.verbose < logger.INFO:
            return self
        log.info('\n')
        log.info('******** %s ********', self.__class__)
        log.info('kappa = %g', self.kappa)
        log.info('beta = %g', self.beta)
        log.info('route = %s', self.route)
        log.info('|f|_inf = %g', abs(self.f.values).max())
        return self

    def operator(self, u):
        return assemble_stiffness(self.mesh, u, self.kappa)

    def solve(self, u):
        '''p = F(u)'''
        op = self.operator(u)
        self.nsolve += 1
        if self.beta == 1 and self.route == 'auto':
            return solve_elliptic(op, self.f, logger.new_logger(self))
        return solve_fractional(eigendecompose(op), self.f, self.beta)

    def gradient(self, u, dphi_dp):
        '''Adjoint gradient d/du of a functional J(p(u)) given dJ/dp.

        Only beta = 1 is available.
        '''
        if self.beta != 1:
            raise NotImplementedError('adjoint gradient for fractional beta')
        u = as_coeffs(u, self.mesh, 'u')
        op = self.operator(u)
        lu = op.factorize()
        p = lu.solve(op.M @ self.f.values)
        lam = lu.solve(numpy.asarray(dphi_dp, dtype=float))
        self.nsolve += 1
        mesh = self.mesh
        i, j = mesh.elem_dofs.T
        c = numpy.exp(.5 * (u[i] + u[j]))
        # dK/du_k on element e is (c_e/2) A_e for both element nodes
        ge = -.5 * c / mesh.elem_width * (lam[i] - lam[j]) * (p[i] - p[j])
        grad = numpy.zeros(mesh.n_dof)
        numpy.add.at(grad, i, ge)
        numpy.add.at(grad, j, ge)
        return grad

    __call__ = solve

ForwardSpec = ForwardModel


def forward_map(fwd, u):
    return fwd.solve(u)


PointEval = namedtuple('PointEval', ['point'])
PointEval.__doc__ = 'Pointwise evaluation p(x) at a GraphPoint x'

class WeightVector:
    '''Linear functional sum_i w_i p_i'''
    __slots__ = ('weights',)
    def __init__(self, weights):
        self.weights = numpy.asarray(weights, dtype=float).ravel()
    def __repr__(self):
        return f'WeightVector(n={self.weights.size})'


def observation_matrix(mesh, functionals):
    '''Sparse (m, n_dof) matrix whose rows are the functionals'''
    rows, cols, vals = [], [], []
    for k, fn in enumerate(functionals):
        if isinstance(fn, PointEval):
            dofs, w = mesh.interpolation_weights(fn.point)
        elif isinstance(fn, WeightVector):
            if fn.weights.size != mesh.n_dof:
                raise ValueError(f'observation {k}: weight vector length '
                                 f'{fn.weights.size} != n_dof {mesh.n_dof}')
            dofs = numpy.nonzero(fn.weights)[0]
            w = fn.weights[dofs]
        else:
            raise TypeError(f'observation {k}: unsupported functional {fn!r}')
        rows.append(numpy.full(len(dofs), k))
        cols.append(dofs)
        vals.append(w)
    m = len(functionals)
    if m == 0:
        return scipy.sparse.csr_matrix((0, mesh.n_dof))
    return scipy.sparse.csr_matrix(
        (numpy.hstack(vals), (numpy.hstack(rows), numpy.hstack(cols))),
        shape=(m, mesh.n_dof))


class ObservationSet:
    '''Functionals l_j, data y and noise covariance Sigma.

    Sigma is a length-m vector of variances (diagonal covariance) or a dense
    (m, m) SPD matrix.
    '''
    def __init__(self, mesh, functionals, y, Sigma):
        self.mesh = mesh
        self.functionals = list(functionals)
        m = len(self.functionals)
        self.y = numpy.asarray(y, dtype=float).ravel()
        Sigma = numpy.asarray(Sigma, dtype=float)
        if self.y.size != m:
            raise ValueError(f'{m} functionals but {self.y.size} data values')
        _check_sigma(Sigma, m)
        self.Sigma = Sigma
        self.H = observation_matrix(mesh, self.functionals)

    @property
    def m(self):
        return len(self.functionals)

    @property
    def sigma(self):
        '''Noise standard deviations'''
        if self.Sigma.ndim == 1:
            return numpy.sqrt(self.Sigma)
        return numpy.sqrt(self.Sigma.diagonal())

    def with_data(self, y):
        '''Same functionals and Sigma, different data'''
        obs = ObservationSet.__new__(ObservationSet)
        obs.mesh = self.mesh
        obs.functionals = self.functionals
        obs.y = numpy.asarray(y, dtype=float).ravel()
        if obs.y.size != self.m:
            raise ValueError(f'{self.m} functionals but {obs.y.size} data values')
        obs.Sigma = self.Sigma
        obs.H = self.H
        return obs

    def same_design(self, other):
        '''Identical functionals and noise covariance'''
        if self.m != other.m or self.Sigma.shape != other.Sigma.shape:
            return False
        if self.H is not other.H and (self.H != other.H).nnz:
            return False
        return bool((self.Sigma == other.Sigma).all())


def _check_sigma(Sigma, m):
    if Sigma.ndim == 1:
        if Sigma.size != m:
            raise ValueError(f'Sigma has {Sigma.size} entries; {m} observations')
        if not (Sigma > 0).all():
            k = int(numpy.argmin(Sigma))
            raise ValueError(f'Sigma entry {k} is not positive ({Sigma[k]})')
    elif Sigma.ndim == 2:
        if Sigma.shape != (m, m):
            raise ValueError(f'Sigma has shape {Sigma.shape}; {m} observations')
        if not (Sigma.diagonal() > 0).all():
            raise ValueError('Sigma has non-positive diagonal entries')
    else:
        raise ValueError('Sigma must be a vector of variances or a matrix')


def observe(p, obs):
    '''(l_1(p), ..., l_m(p))'''
    return obs.H @ as_coeffs(p, obs.mesh, 'p')


def potential(g, y, Sigma):
    '''Phi = 1/2 |y - g|^2_{Sigma^-1}'''
    g = numpy.asarray(g, dtype=float).ravel()
    y = numpy.asarray(y, dtype=float).ravel()
    if g.size != y.size:
        raise ValueError(f'model output has {g.size} entries, data {y.size}')
    Sigma = numpy.asarray(Sigma, dtype=float)
    _check_sigma(Sigma, y.size)
    r = y - g
    if Sigma.ndim == 1:
        return .5 * float(numpy.sum(r**2 / Sigma))
    try:
        cf = scipy.linalg.cho_factor(Sigma)
    except scipy.linalg.LinAlgError:
        raise ValueError('Sigma is not positive definite')
    return .5 * float(r @ scipy.linalg.cho_solve(cf, r))


def potential_gradient(g, y, Sigma):
    '''dPhi/dg = Sigma^-1 (g - y)'''
    r = numpy.asarray(g, dtype=float) - numpy.asarray(y, dtype=float)
    Sigma = numpy.asarray(Sigma, dtype=float)
    if Sigma.ndim == 1:
        return r / Sigma
    return scipy.linalg.cho_solve(scipy.linalg.cho_factor(Sigma), r)


class Potential:
    '''u -> Phi(u; y) = potential(G(u), y, Sigma).  One forward solve per call.'''
    def __init__(self, fwd, obs):
        if not fwd.mesh.same_as(obs.mesh):
            raise ValueError('forward model and observations use different meshes')
        self.fwd = fwd
        self.obs = obs

    def __call__(self, u):
        g = observe(self.fwd.solve(u), self.obs)
        return potential(g, self.obs.y, self.obs.Sigma)

    def gradient(self, u):
        '''dPhi/du for the beta = 1 forward model'''
        g = observe(self.fwd.solve(u), self.obs)
        dg = potential_gradient(g, self.obs.y, self.obs.Sigma)
        return self.fwd.gradient(u, self.obs.H.T @ dg)


class NoiseModel:
    '''Mixed noise sigma_i = n_rel |p0_i| + n_abs'''
    def __init__(self, n_rel=NOISE_REL, n_abs=NOISE_ABS):
        if not (n_rel >= 0 and n_abs >= 0):
            raise ValueError(f'noise levels must be nonnegative, got n_rel={n_rel} '
                             f'n_abs={n_abs}')
        self.n_rel = float(n_rel)
        self.n_abs = float(n_abs)

    def sigma(self, p0):
        return self.n_rel * abs(numpy.asarray(p0)) + self.n_abs

    def __repr__(self):
        return f'NoiseModel(n_rel={self.n_rel}, n_abs={self.n_abs})'


def make_synthetic(fwd, u0, noise, at=None, rng_seed=None):
    '''Noisy pointwise observations y_i = p0(x_i) + sigma_i eps_i of
    p0 = F(u0), by default at every mesh DOF'''
    if noise.n_rel + noise.n_abs <= 0:
        raise ValueError('n_rel = n_abs = 0 gives a degenerate noise covariance')
    mesh = fwd.mesh
    if at is None:
        at = mesh.dof_points()
    functionals = [fn if isinstance(fn, (PointEval, WeightVector)) else PointEval(fn)
                   for fn in at]
    p0 = fwd.solve(u0)
    H = observation_matrix(mesh, functionals)
    g0 = H @ p0.values
    sigma = noise.sigma(g0)
    if not (sigma > 0).all():
        k = int(numpy.argmin(sigma))
        raise ValueError(f'observation {k} has zero noise level')
    rng = numpy.random.default_rng(rng_seed)
    eps = rng.standard_normal(len(functionals))
    obs = ObservationSet(mesh, functionals, g0 + sigma * eps, sigma**2)
    obs.truth = g0
    return obs
