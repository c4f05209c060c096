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
Adaptive preconditioned Crank-Nicolson (pCN) sampling with temperature
annealing, posterior summaries and the prior Monte Carlo Hellinger estimator.

The proposal v = sqrt(1 - tau^2) u + tau xi with xi drawn from the prior keeps
the prior invariant, so the acceptance ratio only involves the potential

    a(u, v) = min(1, exp((Phi(u) - Phi(v)) / T)).

Every N_adapt steps the step size tau is adapted to the recent acceptance
rate and the temperature is cooled as T_n = max(1, T0 zeta^floor(n/N_adapt)).
'''

import math
import dataclasses
import numpy
import scipy.optimize
import scipy.special
import scipy.linalg
from pyscf import lib
from pyscf import __config__
from pyscf.lib import logger
from pyscf.qgraph.assembly import Field, as_coeffs
from pyscf.qgraph.forward import Potential

TAU = getattr(__config__, 'qgraph_sampler_tau', .3)
TAU_MIN = getattr(__config__, 'qgraph_sampler_tau_min', .01)
T0 = getattr(__config__, 'qgraph_sampler_T0', 5.)
ZETA = getattr(__config__, 'qgraph_sampler_zeta', .95)
NSTEP = getattr(__config__, 'qgraph_sampler_N', 100000)
NADAPT = getattr(__config__, 'qgraph_sampler_N_adapt', 500)
R_TARGET = getattr(__config__, 'qgraph_sampler_r_target', .40)
BURNIN = getattr(__config__, 'qgraph_sampler_B', 7000)
P_SOLVES = getattr(__config__, 'qgraph_sampler_max_p_solves', 500)
HELLINGER_MIN_ESS = getattr(__config__, 'qgraph_sampler_hellinger_min_ess', 10.)


class ForwardSolveError(RuntimeError):
    '''Forward solve failure inside a chain'''
    def __init__(self, iteration, cause):
        self.iteration = iteration
        self.cause = cause
        RuntimeError.__init__(self, f'forward solve failed at iteration {iteration}: '
                              f'{cause.__class__.__name__}: {cause}')


class IllConditionedError(RuntimeError):
    pass


def _is_int(x):
    return isinstance(x, (int, numpy.integer)) and not isinstance(x, bool)


def _is_real(x):
    return isinstance(x, (int, float, numpy.integer, numpy.floating)) and not isinstance(x, bool)


@dataclasses.dataclass
class ChainConfig:
    '''Hyperparameters of the adaptive annealed pCN chain'''
    tau: float = TAU
    tau_min: float = TAU_MIN
    T0: float = T0
    zeta: float = ZETA
    N: int = NSTEP
    N_adapt: int = NADAPT
    r_target: float = R_TARGET
    B: int = BURNIN
    rng_seed: int = 0
    thin: int = 1

    def check_sanity(self):
        for name in ('tau', 'tau_min', 'T0', 'zeta', 'r_target'):
            if not _is_real(getattr(self, name)):
                raise ValueError(f'{name} must be a real number, got {getattr(self, name)!r}')
        if not (self.rng_seed is None or _is_int(self.rng_seed)):
            raise ValueError(f'rng_seed must be an integer, got {self.rng_seed!r}')
        if not 0 < self.tau_min <= self.tau <= 1:
            raise ValueError(f'need 0 < tau_min <= tau <= 1, got tau_min={self.tau_min} '
                             f'tau={self.tau}')
        if not 0 < self.zeta <= 1:
            raise ValueError(f'cooling factor zeta must be in (0, 1], got {self.zeta}')
        if not self.T0 >= 1:
            raise ValueError(f'initial temperature T0 must be >= 1, got {self.T0}')
        if not 0 < self.r_target < 1:
            raise ValueError(f'target acceptance must be in (0, 1), got {self.r_target}')
        if not (_is_int(self.N) and self.N > 0):
            raise ValueError(f'N must be a positive integer, got {self.N}')
        if not (_is_int(self.N_adapt) and self.N_adapt > 0):
            raise ValueError(f'N_adapt must be a positive integer, got {self.N_adapt}')
        if not (_is_int(self.B) and 0 <= self.B < self.N):
            raise ValueError(f'burn-in B must satisfy 0 <= B < N, got B={self.B} N={self.N}')
        if not (_is_int(self.thin) and self.thin >= 1):
            raise ValueError(f'thin must be a positive integer, got {self.thin}')
        return self

    def temperature(self, n):
        return max(1., self.T0 * self.zeta**(n // self.N_adapt))

    def annealing_steps(self):
        '''First step count after which T = 1, N_adapt ceil(log(1/T0)/log(zeta))'''
        if self.T0 == 1:
            return 0
        if self.zeta == 1:
            return math.inf
        return self.N_adapt * math.ceil(math.log(1. / self.T0) / math.log(self.zeta))

    def to_dict(self):
        return dataclasses.asdict(self)


class ChainResult:
    '''Samples and traces of a chain.

    Attributes:
        samples : ndarray (nkeep, n_dof)
            Retained states after burn-in, every ``thin``-th step.
        accepted : ndarray of bool (N,)
        tau : ndarray (N,)
            Step size used at every step.
        temperature : ndarray (N,)
        phi : ndarray (N,)
            Potential of the chain state after every step.
        prior_quad : ndarray (N,)
            Prior quadratic form of the chain state after every step.
        nsolve : int
            Forward solves spent in the loop.
    '''
    def __init__(self, mesh, config, samples, accepted, tau, temperature, phi,
                 prior_quad, nsolve=0):
        self.mesh = mesh
        self.config = config
        self.samples = samples
        self.accepted = accepted
        self.tau = tau
        self.temperature = temperature
        self.phi = phi
        self.prior_quad = prior_quad
        self.nsolve = nsolve

    @property
    def kept_index(self):
        return numpy.arange(self.config.B, self.config.N, self.config.thin)

    @property
    def phi_kept(self):
        return self.phi[self.kept_index]

    @property
    def prior_quad_kept(self):
        return self.prior_quad[self.kept_index]

    def acceptance_rate(self, start=0, stop=None):
        acc = self.accepted[start:stop]
        if acc.size == 0:
            return math.nan
        return float(acc.mean())

    def stable_start(self):
        cooled = numpy.nonzero(self.temperature <= 1)[0]
        n_cool = cooled[0] if cooled.size else len(self.temperature)
        return int(max(self.config.B, n_cool))

    def stable_acceptance(self):
        '''Acceptance rate after burn-in and after the temperature reached 1'''
        return self.acceptance_rate(self.stable_start())

    def trace(self):
        '''Per-step trace columns n, accepted, tau, T, phi, prior_quad'''
        return {
            'n': numpy.arange(1, len(self.accepted) + 1),
            'accepted': self.accepted.astype(int),
            'tau': self.tau,
            'T': self.temperature,
            'phi': self.phi,
            'prior_quad': self.prior_quad,
        }


def pcn_step(u, tau, T, prior, phi_u, target, rng):
    '''One annealed pCN step.

    Returns:
        (state, accepted, phi of state).  On rejection the input state and its
        cached potential are returned.
    '''
    as_field = isinstance(u, Field)
    x = as_coeffs(u, prior.mesh, 'u')
    xi = prior.sample(rng).values
    v = math.sqrt(1. - tau**2) * x + tau * xi
    phi_v = target(v)
    log_a = (phi_u - phi_v) / T
    # exp of a non-positive number never overflows
    accept = rng.random() < math.exp(min(0., log_a))
    if not accept:
        return u, False, phi_u
    if as_field:
        v = Field(prior.mesh, v, 'u')
    return v, True, phi_v


class AdaptivePCN(lib.StreamObject):
    '''Adaptive pCN with temperature annealing.

    Attributes:
        config : ChainConfig
        prior : WhittleMaternPrior
        target : callable
            u -> Phi(u; y).

    Saved results:
        result : ChainResult
    '''
    _keys = {'config', 'prior', 'target', 'mesh', 'result', 'u_init',
             'verbose', 'stdout'}

    def __init__(self, config, prior, target, u_init=None, verbose=None):
        self.config = config
        self.prior = prior
        self.target = target
        self.mesh = prior.mesh
        self.u_init = u_init
        self.verbose = prior.verbose if verbose is None else verbose
        self.stdout = prior.stdout
##################################################
# don't modify the following attributes, they are not input options
        self.result = None

    def dump_flags(self, verbose=None):
        log = logger.new_logger(self, verbose)
        if log.verbose < logger.INFO:
            return self
        cfg = self.config
        log.info('\n')
        log.info('******** %s ********', self.__class__)
        log.info('tau = %g  tau_min = %g', cfg.tau, cfg.tau_min)
        log.info('T0 = %g  zeta = %g', cfg.T0, cfg.zeta)
        log.info('N = %d  N_adapt = %d  B = %d  thin = %d',
                 cfg.N, cfg.N_adapt, cfg.B, cfg.thin)
        log.info('r_target = %g', cfg.r_target)
        log.info('rng_seed = %s', cfg.rng_seed)
        return self

    def check_sanity(self):
        cfg = self.config.check_sanity()
        n_anneal = cfg.annealing_steps()
        if cfg.B < n_anneal:
            logger.warn(self, 'burn-in B = %d ends before annealing reaches T = 1 '
                        '(step %s)', cfg.B, n_anneal)
        return self

    def kernel(self, u_init=None):
        log = logger.new_logger(self)
        t0 = (logger.process_clock(), logger.perf_counter())
        self.check_sanity()
        self.dump_flags(log)
        cfg = self.config
        prior = self.prior
        target = self.target
        rng = numpy.random.default_rng(cfg.rng_seed)

        if u_init is None:
            u_init = self.u_init
        if u_init is None:
            u = prior.sample(rng).values
        else:
            u = as_coeffs(u_init, self.mesh, 'u_init').copy()
        try:
            phi_u = target(u)
        except Exception as e:
            raise ForwardSolveError(0, e) from e
        quad_u = prior.precision_quadratic(u)
        log.debug('initial Phi = %.10g  prior quadratic = %.10g', phi_u, quad_u)

        N = cfg.N
        accepted = numpy.zeros(N, dtype=bool)
        taus = numpy.empty(N)
        temps = numpy.empty(N)
        phis = numpy.empty(N)
        quads = numpy.empty(N)
        nkeep = len(range(cfg.B, N, cfg.thin))
        samples = numpy.empty((nkeep, self.mesh.n_dof))
        ikeep = 0
        tau = cfg.tau
        nsolve0 = getattr(getattr(target, 'fwd', None), 'nsolve', 0)

        for n in range(1, N + 1):
            T = cfg.temperature(n)
            try:
                u, acc, phi_u = pcn_step(u, tau, T, prior, phi_u, target, rng)
            except Exception as e:
                raise ForwardSolveError(n, e) from e
            if acc:
                quad_u = prior.precision_quadratic(u)
            accepted[n-1] = acc
            taus[n-1] = tau
            temps[n-1] = T
            phis[n-1] = phi_u
            quads[n-1] = quad_u
            log.debug1('step %d  accepted %s  Phi %.10g', n, acc, phi_u)
            if n > cfg.B and (n - cfg.B - 1) % cfg.thin == 0:
                samples[ikeep] = u
                ikeep += 1

            if n % cfg.N_adapt == 0:
                rbar = accepted[n-cfg.N_adapt:n].mean()
                log.info('step %7d  tau %.4f  T %.4f  recent acceptance %.3f  '
                         'Phi %.6g', n, tau, T, rbar, phi_u)
                if rbar < .9 * cfg.r_target:
                    tau = max(.9 * tau, cfg.tau_min)
                elif rbar > 1.1 * cfg.r_target:
                    tau = min(1.2 * tau, 1.)
        assert ikeep == nkeep

        nsolve = getattr(getattr(target, 'fwd', None), 'nsolve', 0) - nsolve0
        self.result = ChainResult(self.mesh, cfg, samples, accepted, taus, temps,
                                  phis, quads, nsolve)
        log.note('pCN chain: overall acceptance %.3f  stable acceptance %.3f',
                 self.result.acceptance_rate(), self.result.stable_acceptance())
        logger.timer(self, 'pCN chain', *t0)
        return self.result


def run_chain(cfg, prior, fwd, obs, u_init=None, verbose=None):
    '''Run the adaptive annealed pCN chain for the posterior of u given obs'''
    prior.check_inversion()
    if not (prior.mesh.same_as(fwd.mesh) and prior.mesh.same_as(obs.mesh)):
        raise ValueError('prior, forward model and observations must share one mesh')
    target = Potential(fwd, obs)
    return AdaptivePCN(cfg, prior, target, u_init, verbose).kernel()


def posterior_summaries(result, prior, target=None, refine=False):
    '''Posterior mean, marginal standard deviation and MAP estimate.

    The MAP estimate is the retained sample minimizing Phi + prior quadratic.
    With ``refine=True`` it is polished by L-BFGS on that objective, which
    needs ``target.gradient`` (beta = 1 forward models).
    '''
    samples = result.samples
    if samples.shape[0] == 0:
        raise ValueError('no retained samples after burn-in')
    mesh = result.mesh
    mean = samples.mean(axis=0)
    std = samples.std(axis=0)
    k = int(numpy.argmin(result.phi_kept + result.prior_quad_kept))
    u_map = samples[k].copy()
    if refine:
        if target is None:
            raise ValueError('MAP refinement needs the potential evaluator')
        u_map = refine_map(u_map, prior, target)
    return Field(mesh, mean, 'u'), Field(mesh, std, 'std'), Field(mesh, u_map, 'u')


def refine_map(u, prior, target, maxiter=200, verbose=None):
    '''Local minimization of Phi(u) + 1/2 u^T Q0 u from u'''
    log = logger.new_logger(prior, verbose)
    def fun(x):
        phi = target(x)
        grad = target.gradient(x) + prior.precision_action(x)
        return phi + prior.precision_quadratic(x), grad
    res = scipy.optimize.minimize(fun, as_coeffs(u, prior.mesh, 'u'), jac=True,
                                  method='L-BFGS-B', options={'maxiter': maxiter})
    log.info('MAP refinement: objective %.10g after %d iterations (%s)',
             res.fun, res.nit, res.message)
    return res.x


def solution_summaries(result, fwd, mean_u, map_u, max_solves=P_SOLVES):
    '''Forward solutions of the posterior mean and MAP estimate, and the
    pointwise standard deviation of F(u) over a thinned subset of samples'''
    nkeep = result.samples.shape[0]
    if nkeep == 0:
        raise ValueError('no retained samples after burn-in')
    stride = max(1, -(-nkeep // max_solves))
    ps = numpy.array([fwd.solve(u).values for u in result.samples[::stride]])
    mean_p = fwd.solve(mean_u)
    map_p = fwd.solve(map_u)
    return mean_p, Field(result.mesh, ps.std(axis=0), 'std'), map_p


class HellingerEstimator(lib.StreamObject):
    '''Prior Monte Carlo estimate of the Hellinger distance between the
    posteriors for data y and y' sharing functionals and noise.

        BC = mean(sqrt(w w')) / sqrt(mean(w) mean(w')),   w = exp(-Phi(u_k; y))
        d_H = sqrt(1 - BC)

    Model outputs G(u_k) of the prior draws are computed once and reused for
    any number of data vectors.
    '''
    _keys = {'prior', 'fwd', 'obs', 'n_samples', 'rng_seed', 'min_ess',
             'verbose', 'stdout', 'outputs', 'ess'}

    min_ess = HELLINGER_MIN_ESS

    def __init__(self, prior, fwd, obs, n_samples, rng_seed=None, verbose=None):
        if not (prior.mesh.same_as(fwd.mesh) and prior.mesh.same_as(obs.mesh)):
            raise ValueError('prior, forward model and observations must share one mesh')
        if not n_samples >= 1:
            raise ValueError(f'n_samples must be positive, got {n_samples}')
        self.prior = prior
        self.fwd = fwd
        self.obs = obs
        self.n_samples = int(n_samples)
        self.rng_seed = rng_seed
        self.verbose = prior.verbose if verbose is None else verbose
        self.stdout = prior.stdout
##################################################
# don't modify the following attributes, they are not input options
        self.outputs = None
        self.ess = None

    def dump_flags(self, verbose=None):
        log = logger.new_logger(self, verbose)
        if log.verbose < logger.INFO:
            return self
        log.info('\n')
        log.info('******** %s ********', self.__class__)
        log.info('n_samples = %d', self.n_samples)
        log.info('rng_seed = %s', self.rng_seed)
        log.info('observations m = %d', self.obs.m)
        return self

    def build(self):
        if self.outputs is None:
            t0 = (logger.process_clock(), logger.perf_counter())
            self.dump_flags()
            rng = numpy.random.default_rng(self.rng_seed)
            H = self.obs.H
            self.outputs = numpy.empty((self.n_samples, self.obs.m))
            for k in range(self.n_samples):
                u = self.prior.sample(rng)
                self.outputs[k] = H @ self.fwd.solve(u).values
            logger.timer(self, 'Hellinger prior draws', *t0)
        return self

    def potentials(self, y):
        self.build()
        r = numpy.asarray(y, dtype=float) - self.outputs
        Sigma = self.obs.Sigma
        if Sigma.ndim == 1:
            return .5 * numpy.einsum('km,km->k', r, r / Sigma)
        L = scipy.linalg.cholesky(Sigma, lower=True)
        w = scipy.linalg.solve_triangular(L, r.T, lower=True)
        return .5 * numpy.einsum('mk,mk->k', w, w)

    def distance(self, y, yprime):
        log = logger.new_logger(self)
        lw = -self.potentials(y)
        lwp = -self.potentials(yprime)
        for name, x in (('y', lw), ("y'", lwp)):
            if not numpy.exp(x).any():
                raise IllConditionedError(
                    f'all {self.n_samples} importance weights for {name} underflow; '
                    'the prior Monte Carlo estimator cannot resolve this posterior')
        lse = scipy.special.logsumexp
        log_num = lse(.5 * (lw + lwp))
        log_den = .5 * (lse(lw) + lse(lwp))
        self.ess = min(math.exp(2 * lse(lw) - lse(2 * lw)),
                       math.exp(2 * lse(lwp) - lse(2 * lwp)))
        if self.ess < self.min_ess:
            log.warn('Hellinger estimate rests on %.1f effective samples', self.ess)
        bc = min(1., math.exp(log_num - log_den))
        return math.sqrt(max(0., 1. - bc))

    def sweep(self, deltas, direction=None):
        '''d_H(y, y + delta d) for a fixed unit direction d.

        Returns:
            list of (delta, d_H, d_H/delta)
        '''
        y = self.obs.y
        if direction is None:
            direction = numpy.ones(self.obs.m) / math.sqrt(max(self.obs.m, 1))
        direction = numpy.asarray(direction, dtype=float)
        direction = direction / numpy.linalg.norm(direction)
        rows = []
        for delta in deltas:
            dh = self.distance(y, y + delta * direction)
            ratio = dh / delta if delta != 0 else math.nan
            logger.info(self, 'delta = %-10.4g  d_H = %.6e  d_H/delta = %.6g',
                        delta, dh, ratio)
            rows.append((float(delta), dh, ratio))
        return rows

    kernel = sweep


def hellinger_estimate(prior, fwd, obs_y, obs_yprime, n_samples, rng_seed=None):
    '''Hellinger distance between the posteriors for obs_y and obs_yprime'''
    if not obs_y.same_design(obs_yprime):
        raise ValueError('observation sets differ in functionals or Sigma')
    est = HellingerEstimator(prior, fwd, obs_y, n_samples, rng_seed)
    return est.distance(obs_y.y, obs_yprime.y)


def rmse(a, b):
    a = a.values if isinstance(a, Field) else numpy.asarray(a)
    b = b.values if isinstance(b, Field) else numpy.asarray(b)
    return float(numpy.sqrt(numpy.mean((a - b)**2)))
