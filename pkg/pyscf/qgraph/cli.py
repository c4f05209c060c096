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
Experiment driver

    qgraph run       --config CFG [--output DIR] [--seed-override S] [--replicates R]
    qgraph check     --config CFG
    qgraph hellinger --config CFG [--delta D] [--n-samples N]

CFG is a JSON experiment configuration, a run manifest, or builtin:<preset>
(elliptic, fractional, check).  Exit status is 0 on success, 1 on a
validation failure and 2 on a runtime failure.
'''

import os
import sys
import math
import json
import copy
import argparse
import dataclasses
import datetime
import numpy
import scipy.stats
from pyscf import lib
from pyscf import __config__
from pyscf.lib import logger
from pyscf.qgraph import graph as graph_mod
from pyscf.qgraph import assembly
from pyscf.qgraph import spectral
from pyscf.qgraph import diagnostics
from pyscf.qgraph import csvfile
from pyscf.qgraph import chkfile
from pyscf.qgraph.prior import WhittleMaternPrior, KAPPA0, DIFFUSION, ALPHA
from pyscf.qgraph.forward import (ForwardModel, NoiseModel, make_source,
                                  make_synthetic, KAPPA, BETA, NOISE_REL,
                                  NOISE_ABS)
from pyscf.qgraph.sampler import (ChainConfig, run_chain, posterior_summaries,
                                  solution_summaries, HellingerEstimator,
                                  IllConditionedError, rmse)

HELLINGER_MAX_DOF = getattr(__config__, 'qgraph_cli_hellinger_max_dof', 200)
HELLINGER_SAMPLES = getattr(__config__, 'qgraph_cli_hellinger_n_samples', 100000)
HELLINGER_DELTAS = (.1, .05, .025)
# reported RMSE of the fractional experiment, recorded for comparison only
REFERENCE_FRACTIONAL_RMSE = .08

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

BLOCK_KEYS = {
    'mesh': {'h'},
    'forward': {'kappa', 'beta', 'source'},
    'prior': {'kappa0', 'a', 'alpha'},
    'noise': {'n_rel', 'n_abs', 'seed'},
    'truth': {'seed', 'file'},
    'chain': {f.name for f in dataclasses.fields(ChainConfig)},
    'hellinger': {'deltas', 'n_samples', 'seed'},
}
TOP_KEYS = set(BLOCK_KEYS) | {'name', 'graph', 'output', 'replicates'}


class ConfigError(ValueError):
    pass


def _check_keys(doc, allowed, where):
    if not isinstance(doc, dict):
        raise ConfigError(f'{where} must be a JSON object')
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ConfigError(f'unknown keys in {where}: {unknown}')


def _real(block, key, default, where):
    v = block.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f'{where} "{key}" must be a number, got {v!r}')
    return float(v)


def _integer(block, key, default, where):
    v = block.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f'{where} "{key}" must be an integer, got {v!r}')
    return v


class ExperimentConfig:
    '''One JSON document describing a complete experiment.

    Relative input paths (graph, source and truth files) resolve against the
    directory of the config file; the output directory is relative to the
    working directory.
    '''
    def __init__(self, doc, base_dir='.'):
        doc = copy.deepcopy(doc)
        _check_keys(doc, TOP_KEYS, 'config')
        for name, keys in BLOCK_KEYS.items():
            _check_keys(doc.get(name, {}), keys, f'config block "{name}"')
        self.base_dir = os.path.abspath(base_dir)
        self.name = doc.get('name')
        if 'graph' not in doc:
            raise ConfigError('config has no "graph" entry')
        self.graph = self._path(doc['graph'])
        self.h = _real(doc.get('mesh', {}), 'h', .05, 'mesh')

        fwd = doc.get('forward', {})
        self.kappa = _real(fwd, 'kappa', KAPPA, 'forward')
        self.beta = _real(fwd, 'beta', BETA, 'forward')
        source = fwd.get('source', 'z1sq_minus_z2sq')
        if source not in ('z1sq_minus_z2sq', 'constant'):
            source = self._path(source)
        self.source = source

        prior = doc.get('prior', {})
        self.kappa0 = _real(prior, 'kappa0', KAPPA0, 'prior')
        self.a = _real(prior, 'a', DIFFUSION, 'prior')
        self.alpha = _real(prior, 'alpha', ALPHA, 'prior')

        noise = doc.get('noise', {})
        self.n_rel = _real(noise, 'n_rel', NOISE_REL, 'noise')
        self.n_abs = _real(noise, 'n_abs', NOISE_ABS, 'noise')
        self.noise_seed = _integer(noise, 'seed', 1, 'noise')

        truth = doc.get('truth', {})
        self.truth_seed = _integer(truth, 'seed', 0, 'truth')
        self.truth_file = self._path(truth['file']) if 'file' in truth else None

        self.chain = ChainConfig(**doc.get('chain', {}))

        hel = doc.get('hellinger', {})
        deltas = hel.get('deltas', HELLINGER_DELTAS)
        if not isinstance(deltas, (list, tuple)):
            raise ConfigError(f'hellinger "deltas" must be a list, got {deltas!r}')
        self.hellinger_deltas = [_real({'deltas': d}, 'deltas', None, 'hellinger')
                                 for d in deltas]
        self.hellinger_samples = _integer(hel, 'n_samples', HELLINGER_SAMPLES, 'hellinger')
        self.hellinger_seed = _integer(hel, 'seed', 0, 'hellinger')

        self.output = doc.get('output', 'qgraph_output')
        if not isinstance(self.output, str):
            raise ConfigError(f'output must be a directory name, got {self.output!r}')
        self.replicates = _integer(doc, 'replicates', 1, 'config')

    def _path(self, p):
        if not isinstance(p, str):
            raise ConfigError(f'expected a file path, got {p!r}')
        if p.startswith('builtin:') or os.path.isabs(p):
            return p
        return os.path.normpath(os.path.join(self.base_dir, p))

    @classmethod
    def from_file(cls, path):
        '''Read a config file, a run manifest or a bundled preset'''
        if path.startswith('builtin:'):
            path = os.path.join(graph_mod.DATA_DIR, path.split(':', 1)[1] + '.json')
        if not os.path.isfile(path):
            raise FileNotFoundError(f'config file {path} not found')
        with open(path, 'r', encoding='utf-8') as f:
            try:
                doc = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigError(f'cannot parse {path}: {e}')
        if isinstance(doc, dict) and doc.get('command') and 'config' in doc:
            doc = doc['config']
        return cls(doc, os.path.dirname(os.path.abspath(path)))

    def check_sanity(self):
        if not self.h > 0:
            raise ConfigError(f'mesh h must be positive, got {self.h}')
        if not self.kappa > 0:
            raise ConfigError(f'forward kappa must be positive, got {self.kappa}')
        if not self.beta >= 1:
            raise ConfigError(f'forward beta must be >= 1, got {self.beta}')
        if not (self.kappa0 > 0 and self.a > 0):
            raise ConfigError('prior kappa0 and a must be positive')
        if not self.alpha > .75:
            raise ConfigError(f'prior alpha must exceed 3/4, got {self.alpha}')
        if not (self.n_rel >= 0 and self.n_abs >= 0 and self.n_rel + self.n_abs > 0):
            raise ConfigError('noise levels must be nonnegative and not both zero')
        if self.replicates < 1:
            raise ConfigError(f'replicates must be >= 1, got {self.replicates}')
        if self.hellinger_samples < 1:
            raise ConfigError('hellinger n_samples must be positive')
        self.chain.check_sanity()
        if self.chain.rng_seed is None:
            raise ConfigError('chain rng_seed must be an integer for a reproducible run')
        for p in (self.graph, self.truth_file, self.source):
            if p is None or p in ('z1sq_minus_z2sq', 'constant'):
                continue
            if not p.startswith('builtin:') and not os.path.isfile(p):
                raise FileNotFoundError(f'referenced file {p} not found')
        return self

    def apply_seed_override(self, seed):
        '''Derive the truth, noise, chain and Hellinger seeds from one integer'''
        truth, noise, chain, hel = numpy.random.SeedSequence(seed).generate_state(4)
        self.truth_seed = int(truth)
        self.noise_seed = int(noise)
        self.chain = dataclasses.replace(self.chain, rng_seed=int(chain))
        self.hellinger_seed = int(hel)
        return self

    def seeds(self):
        return {'truth': self.truth_seed, 'noise': self.noise_seed,
                'chain': self.chain.rng_seed, 'hellinger': self.hellinger_seed}

    def to_dict(self):
        '''Resolved config, loadable by ExperimentConfig'''
        doc = {
            'graph': self.graph,
            'mesh': {'h': self.h},
            'forward': {'kappa': self.kappa, 'beta': self.beta, 'source': self.source},
            'prior': {'kappa0': self.kappa0, 'a': self.a, 'alpha': self.alpha},
            'noise': {'n_rel': self.n_rel, 'n_abs': self.n_abs, 'seed': self.noise_seed},
            'truth': {'seed': self.truth_seed},
            'chain': self.chain.to_dict(),
            'hellinger': {'deltas': self.hellinger_deltas,
                          'n_samples': self.hellinger_samples,
                          'seed': self.hellinger_seed},
            'output': os.path.abspath(self.output),
            'replicates': self.replicates,
        }
        if self.truth_file:
            doc['truth']['file'] = self.truth_file
        if self.name:
            doc['name'] = self.name
        return doc


class Experiment(lib.StreamObject):
    '''Pipeline load -> mesh -> truth -> data -> chain -> summaries -> write.

    ``stage`` names the step in progress so that failures can be reported.
    '''
    _keys = {'config', 'stage', 'graph', 'mesh', 'prior', 'fwd', 'u0', 'p0',
             'obs', 'verbose', 'stdout'}

    def __init__(self, config, verbose=None, stdout=None):
        self.config = config
        self.verbose = getattr(__config__, 'qgraph_verbose', logger.NOTE) \
                if verbose is None else verbose
        self.stdout = stdout or sys.stdout
        self.stage = 'config'
        self.graph = self.mesh = self.prior = self.fwd = None
        self.u0 = self.p0 = self.obs = None

    def dump_flags(self, verbose=None):
        log = logger.new_logger(self, verbose)
        if log.verbose < logger.INFO:
            return self
        cfg = self.config
        log.info('\n')
        log.info('******** %s ********', self.__class__)
        log.info('graph = %s', cfg.graph)
        log.info('h = %g', cfg.h)
        log.info('forward: kappa = %g beta = %g source = %s', cfg.kappa, cfg.beta,
                 cfg.source)
        log.info('prior: kappa0 = %g a = %g alpha = %g', cfg.kappa0, cfg.a, cfg.alpha)
        log.info('noise: n_rel = %g n_abs = %g', cfg.n_rel, cfg.n_abs)
        log.info('seeds = %s', cfg.seeds())
        log.info('output = %s', cfg.output)
        return self

    def _own(self, obj):
        obj.verbose = self.verbose
        obj.stdout = self.stdout
        return obj

    def build(self):
        '''Graph, mesh, prior and forward model'''
        cfg = self.config
        self.stage = 'load'
        self.graph = graph_mod.load_graph(cfg.graph)
        self.stage = 'mesh'
        self.mesh = graph_mod.build_mesh(self.graph, cfg.h)
        logger.info(self, 'graph %s: %d vertices, %d edges, total length %.6g, '
                    'n_dof = %d', self.graph.name, self.graph.nvertex,
                    self.graph.nedge, self.graph.total_length, self.mesh.n_dof)
        self.prior = self._own(WhittleMaternPrior(self.mesh, cfg.kappa0, cfg.a,
                                                  cfg.alpha, self.verbose))
        self.fwd = self._own(ForwardModel(self.mesh, make_source(self.mesh, cfg.source),
                                          cfg.kappa, cfg.beta, self.verbose))
        return self

    def make_truth(self):
        cfg = self.config
        self.stage = 'truth'
        if cfg.truth_file:
            self.u0 = csvfile.read_field(cfg.truth_file, self.mesh, 'u')
        else:
            self.u0 = self.prior.sample(cfg.truth_seed)
        self.p0 = self.fwd.solve(self.u0)
        return self.u0

    def make_data(self):
        cfg = self.config
        self.stage = 'data'
        noise = NoiseModel(cfg.n_rel, cfg.n_abs)
        self.obs = make_synthetic(self.fwd, self.u0, noise, None, cfg.noise_seed)
        return self.obs

    def run(self):
        '''Full inversion; returns the manifest'''
        cfg = self.config
        t0 = (logger.process_clock(), logger.perf_counter())
        self.dump_flags()
        self.build()
        self.prior.check_inversion()
        self.make_truth()
        self.make_data()

        self.stage = 'write'
        out = os.path.abspath(cfg.output)
        os.makedirs(out, exist_ok=True)
        files = [
            csvfile.write_field(os.path.join(out, 'truth_u.csv'), self.u0),
            csvfile.write_field(os.path.join(out, 'truth_p.csv'), self.p0),
            csvfile.write_observations(os.path.join(out, 'observations.csv'), self.obs),
        ]
        prior_std = numpy.sqrt(self.prior.covariance_diag().values)

        replicates = []
        for r in range(cfg.replicates):
            chain_cfg = dataclasses.replace(cfg.chain, rng_seed=cfg.chain.rng_seed + r)
            outdir = out if cfg.replicates == 1 else os.path.join(out, f'rep{r:02d}')
            replicates.append(self._run_replicate(chain_cfg, outdir, prior_std, files))

        manifest = {
            'command': 'run',
            'package': 'pyscf.qgraph',
            'version': _version(),
            'timestamp': datetime.datetime.now(datetime.timezone.utc).isoformat(),
            'config': cfg.to_dict(),
            'seeds': cfg.seeds(),
            'n_dof': self.mesh.n_dof,
            'n_obs': self.obs.m,
            'graph_total_length': self.graph.total_length,
            'mean_prior_std': float(prior_std.mean()),
            'reference_fractional_rmse': REFERENCE_FRACTIONAL_RMSE,
            'replicates': replicates,
            'files': [os.path.relpath(f, out) for f in files],
        }
        # single-chain metrics at top level
        manifest.update(replicates[0]['metrics'])
        self.stage = 'write'
        path = os.path.join(out, 'manifest.json')
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(_jsonable(manifest), f, indent=2, sort_keys=True)
            f.write('\n')
        logger.timer(self, 'qgraph run', *t0)
        return manifest

    def _run_replicate(self, chain_cfg, outdir, prior_std, files):
        self.stage = 'chain'
        result = run_chain(chain_cfg, self.prior, self.fwd, self.obs,
                           verbose=self.verbose)

        self.stage = 'summaries'
        mean_u, std_u, map_u = posterior_summaries(result, self.prior)
        mean_p, std_p, map_p = solution_summaries(result, self.fwd, mean_u, map_u)
        mesh = self.mesh
        diff_u = assembly.Field(mesh, abs(self.u0.values - mean_u.values), 'diff')
        diff_p = assembly.Field(mesh, abs(self.p0.values - mean_p.values), 'diff')
        spearman = scipy.stats.spearmanr(std_u.values, diff_u.values)[0]
        metrics = {
            'rmse_mean_u': rmse(mean_u, self.u0),
            'rmse_map_u': rmse(map_u, self.u0),
            'rmse_mean_p': rmse(mean_p, self.p0),
            'rmse_map_p': rmse(map_p, self.p0),
            'rmse_ratio_to_prior_std': rmse(mean_u, self.u0) / float(prior_std.mean()),
            'acceptance_overall': result.acceptance_rate(),
            'acceptance_stable': result.stable_acceptance(),
            'stable_start': result.stable_start(),
            'spearman_std_vs_error': float(spearman),
            'forward_solves': result.nsolve,
        }
        logger.note(self, 'RMSE(mean u) = %.6g  RMSE(MAP u) = %.6g  stable acceptance '
                    '= %.3f', metrics['rmse_mean_u'], metrics['rmse_map_u'],
                    metrics['acceptance_stable'])

        self.stage = 'write'
        os.makedirs(outdir, exist_ok=True)
        fields = {
            'post_mean_u.csv': mean_u, 'post_std_u.csv': std_u, 'map_u.csv': map_u,
            'post_mean_p.csv': mean_p, 'post_std_p.csv': std_p, 'map_p.csv': map_p,
            'diff_u.csv': diff_u, 'diff_p.csv': diff_p,
        }
        for fname, field in fields.items():
            files.append(csvfile.write_field(os.path.join(outdir, fname), field))
        files.append(csvfile.write_trace(os.path.join(outdir, 'chain_trace.csv'), result))
        chk = os.path.join(outdir, 'chain.chk')
        if os.path.exists(chk):
            os.remove(chk)
        files.append(chkfile.dump_chain(chk, result, summaries={
            'mean_u': mean_u.values, 'std_u': std_u.values, 'map_u': map_u.values}))
        return {'seed': chain_cfg.rng_seed, 'directory': outdir, 'metrics': metrics}

    def check(self, out=None):
        '''Diagnostic suite.  Returns rows (name, passed, value, tolerance).'''
        cfg = self.config
        self.build()
        self.stage = 'check'
        mesh = self.mesh
        rng = numpy.random.default_rng(cfg.truth_seed)
        draw = self.prior.sample(rng).values
        # bounded random coefficient
        u = assembly.Field(mesh, draw / max(1., abs(draw).max()), 'u')
        op = assembly.assemble_stiffness(mesh, u, cfg.kappa)
        op0 = assembly.assemble_stiffness(mesh, assembly.constant_field(mesh, 0.),
                                          cfg.kappa)
        f = self.fwd.f
        A = op.A
        rows = []
        def add(name, value, tol, passed=None):
            if passed is None:
                passed = bool(numpy.isfinite(value) and value <= tol)
            rows.append((name, passed, float(value), tol))

        total = self.graph.total_length
        add('dof_sharing', 0. if diagnostics.dof_sharing(mesh) else 1., 0.)
        add('mass_total', abs(diagnostics.mass_total(mesh) - total) / total, 1e-12)
        add('stiffness_row_sums', abs(A @ numpy.ones(mesh.n_dof)).max()
            / abs(A).max(), 1e-10)
        add('energy_identity', diagnostics.energy_identity(op, f), 1e-9)
        basis = spectral.eigendecompose(op)
        add('lambda1', abs(basis.eigenvalues[0] - cfg.kappa**2), 1e-9)
        add('orthonormality', diagnostics.orthonormality(basis), 1e-9)
        add('parseval', diagnostics.parseval(basis, f), 1e-8)
        add('route_beta1', diagnostics.route_equivalence(self.fwd, u), 1e-8)
        add('double_solve_beta2', diagnostics.double_solve_equivalence(op, f), 1e-8)
        lower, upper = spectral.weyl_ratio(basis, u)
        add('weyl_ratio', lower, math.inf,
            passed=bool(0 < lower < math.inf and 0 < upper < math.inf))
        basis0 = spectral.eigendecompose(op0)
        lo0, up0 = spectral.weyl_ratio(basis0, op0.u)
        add('weyl_bracket', max(lo0 - lower, upper - up0, 0.), 1e-9 * up0)
        if mesh.n_dof <= HELLINGER_MAX_DOF:
            add('prior_covariance_routes',
                diagnostics.prior_covariance_routes(self.prior), 1e-8)
        var = self.prior.covariance_diag().values
        add('prior_variance_positive', -var.min(), 0., passed=bool((var > 0).all()))

        if out:
            os.makedirs(out, exist_ok=True)
            csvfile.write_eigenvalues(os.path.join(out, 'eigenvalues.csv'),
                                      basis0.eigenvalues)
        return rows

    def hellinger(self, deltas=None, n_samples=None):
        cfg = self.config
        self.build()
        n_dof = self.mesh.n_dof
        if n_dof > HELLINGER_MAX_DOF:
            h_min = self.graph.total_length / max(HELLINGER_MAX_DOF - self.graph.nvertex, 1)
            raise ConfigError(f'n_dof = {n_dof} exceeds the Hellinger limit of '
                              f'{HELLINGER_MAX_DOF}; use a coarser mesh (h >= {h_min:.3g})')
        self.prior.check_inversion()
        self.make_truth()
        self.make_data()
        self.stage = 'hellinger'
        est = HellingerEstimator(self.prior, self.fwd, self.obs,
                                 n_samples or cfg.hellinger_samples,
                                 cfg.hellinger_seed, self.verbose)
        self._own(est)
        return est.sweep(deltas if deltas is not None else cfg.hellinger_deltas)


def _version():
    from pyscf.qgraph import __version__
    return __version__


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (numpy.integer,)):
        return int(x)
    if isinstance(x, (float, numpy.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def _guarded(exp, func, *args):
    '''Run func mapping failures to exit codes and a message naming the stage'''
    try:
        return func(*args)
    except numpy.linalg.LinAlgError as e:
        print(f'qgraph: runtime failure in stage "{exp.stage}": {e}', file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, FileNotFoundError) as e:
        print(f'qgraph: validation failure in stage "{exp.stage}": {e}', file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as e:
        print(f'qgraph: runtime failure in stage "{exp.stage}": '
              f'{e.__class__.__name__}: {e}', file=sys.stderr)
        return EXIT_RUNTIME


def cmd_run(config, verbose=None, stdout=None):
    exp = Experiment(config, verbose, stdout)
    def run():
        config.check_sanity()
        manifest = exp.run()
        print(f'wrote {len(manifest["files"]) + 1} files to {os.path.abspath(config.output)}')
        print(f'RMSE(posterior mean u) = {manifest["rmse_mean_u"]:.6g}  '
              f'stable acceptance = {manifest["acceptance_stable"]:.3f}')
        return EXIT_OK
    return _guarded(exp, run)


def cmd_check(config, out=None, verbose=None, stdout=None):
    exp = Experiment(config, verbose, stdout)
    def check():
        config.check_sanity()
        rows = exp.check(out)
        for name, passed, value, tol in rows:
            print(f'{"PASS" if passed else "FAIL"}  {name:<26s} {value:12.4e}  '
                  f'(tol {tol:.1e})')
        nfail = sum(not r[1] for r in rows)
        print(f'{len(rows) - nfail}/{len(rows)} checks passed')
        return EXIT_OK if nfail == 0 else EXIT_VALIDATION
    return _guarded(exp, check)


def cmd_hellinger(config, delta=None, n_samples=None, verbose=None, stdout=None):
    exp = Experiment(config, verbose, stdout)
    deltas = None if delta is None else [delta, delta / 2, delta / 4]
    def hellinger():
        config.check_sanity()
        try:
            rows = exp.hellinger(deltas, n_samples)
        except IllConditionedError as e:
            print(f'qgraph: ill-conditioned Hellinger estimate: {e}', file=sys.stderr)
            return EXIT_RUNTIME
        print(f'{"delta":>12s} {"d_H":>14s} {"d_H/delta":>14s}')
        for d, dh, ratio in rows:
            print(f'{d:12.6g} {dh:14.6e} {ratio:14.6g}')
        return EXIT_OK
    return _guarded(exp, hellinger)


def build_parser():
    parser = argparse.ArgumentParser(
        prog='qgraph', description='Bayesian inverse problems on metric graphs')
    sub = parser.add_subparsers(dest='command', required=True)
    for name, helptext in (('run', 'run the full inversion pipeline'),
                           ('check', 'run the numerical diagnostic suite'),
                           ('hellinger', 'Hellinger stability sweep')):
        p = sub.add_parser(name, help=helptext)
        p.add_argument('--config', required=True,
                       help='experiment JSON, run manifest or builtin:<preset>')
        p.add_argument('--output', help='output directory (overrides the config)')
        p.add_argument('--seed-override', type=int,
                       help='derive every seed from this integer')
        p.add_argument('-v', '--verbose', action='count', default=0)
        p.add_argument('-q', '--quiet', action='store_true')
        p.add_argument('--log', help='write the log to this file')
        if name == 'run':
            p.add_argument('--replicates', type=int,
                           help='number of chains with consecutive seeds')
        if name == 'hellinger':
            p.add_argument('--delta', type=float,
                           help='largest perturbation; the sweep halves it twice')
            p.add_argument('--n-samples', type=int, help='prior Monte Carlo draws')
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = ExperimentConfig.from_file(args.config)
    except (ValueError, FileNotFoundError, TypeError) as e:
        print(f'qgraph: validation failure in stage "config": {e}', file=sys.stderr)
        return EXIT_VALIDATION
    if args.output:
        config.output = args.output
    if args.seed_override is not None:
        config.apply_seed_override(args.seed_override)
    if getattr(args, 'replicates', None) is not None:
        config.replicates = args.replicates

    verbose = logger.WARN if args.quiet else min(logger.NOTE + args.verbose, logger.DEBUG4)
    stdout = open(args.log, 'w', encoding='utf-8') if args.log else None
    try:
        if args.command == 'run':
            return cmd_run(config, verbose, stdout)
        elif args.command == 'check':
            return cmd_check(config, config.output if args.output else None,
                             verbose, stdout)
        else:
            return cmd_hellinger(config, args.delta, args.n_samples, verbose, stdout)
    finally:
        if stdout is not None:
            stdout.close()


if __name__ == '__main__':
    sys.exit(main())
