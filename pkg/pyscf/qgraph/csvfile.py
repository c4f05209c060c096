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
CSV files for fields, eigenvalues, observations and chain traces.

Floats are written with 17 significant digits so that reloading is exact.
'''

import numpy
import pandas
from pyscf.qgraph.assembly import Field, as_coeffs
from pyscf.qgraph.graph import GraphPoint
from pyscf.qgraph.forward import ObservationSet, PointEval
from pyscf.qgraph.spectral import weyl_ratios

FLOAT_FORMAT = '%.17g'

FIELD_COLUMNS = ['edge_id', 't', 'z1', 'z2', 'value']
EIGEN_COLUMNS = ['j', 'lambda', 'weyl_ratio']
OBS_COLUMNS = ['obs_id', 'edge_id', 't', 'y', 'sigma']
TRACE_COLUMNS = ['n', 'accepted', 'tau', 'T', 'phi', 'prior_quad']


def _write(df, path):
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, encoding='utf-8',
              lineterminator='\n')
    return path


def _read(path, columns, **kwargs):
    df = pandas.read_csv(path, encoding='utf-8', **kwargs)
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise ValueError(f'{path}: missing columns {missing}')
    return df


def write_field(path, field):
    '''One row per node occurrence per edge; vertex values repeat for every
    incident edge'''
    values = as_coeffs(field, field.mesh)
    rows = field.mesh.node_table()
    dofs = numpy.array([r[4] for r in rows], dtype=int)
    df = pandas.DataFrame({
        'edge_id': [str(r[0]) for r in rows],
        't': [r[1] for r in rows],
        'z1': [r[2] for r in rows],
        'z2': [r[3] for r in rows],
        'value': values[dofs],
    }, columns=FIELD_COLUMNS)
    return _write(df, path)


def read_field(path, mesh, role='u'):
    '''Load a Field CSV written for ``mesh``'''
    df = _read(path, FIELD_COLUMNS, dtype={'edge_id': str})
    graph = mesh.graph
    values = numpy.full(mesh.n_dof, numpy.nan)
    for eid, t, v in zip(df['edge_id'], df['t'], df['value']):
        k = graph.edge_index(eid)
        n = mesh.nelem_edge[k]
        node = min(max(int(round(t * n / graph.lengths[k])), 0), n)
        if abs(mesh.node_t[k][node] - t) > 1e-9 * graph.lengths[k]:
            raise ValueError(f'{path}: t = {t} on edge {eid} is not a mesh node')
        dof = mesh.dofmap[k][node]
        if not numpy.isnan(values[dof]) and values[dof] != v:
            raise ValueError(f'{path}: inconsistent values at shared DOF {dof}')
        values[dof] = v
    if numpy.isnan(values).any():
        raise ValueError(f'{path}: {int(numpy.isnan(values).sum())} DOFs have no value')
    return Field(mesh, values, role)


def write_eigenvalues(path, eigenvalues):
    '''Columns j, lambda, weyl_ratio (lambda_j / j^2) over the full spectrum'''
    eigenvalues = numpy.asarray(eigenvalues)
    j = numpy.arange(1, eigenvalues.size + 1)
    df = pandas.DataFrame({'j': j, 'lambda': eigenvalues,
                           'weyl_ratio': weyl_ratios(eigenvalues, 1.)},
                          columns=EIGEN_COLUMNS)
    return _write(df, path)


def write_observations(path, obs):
    '''PointEval observations carry (edge_id, t); other functionals leave
    them empty'''
    eids, ts = [], []
    for fn in obs.functionals:
        if isinstance(fn, PointEval):
            eids.append(str(fn.point.edge))
            ts.append(float(fn.point.t))
        else:
            eids.append('')
            ts.append(numpy.nan)
    df = pandas.DataFrame({'obs_id': numpy.arange(obs.m), 'edge_id': eids, 't': ts,
                           'y': obs.y, 'sigma': obs.sigma}, columns=OBS_COLUMNS)
    return _write(df, path)


def read_observations(path, mesh):
    df = _read(path, OBS_COLUMNS, dtype={'edge_id': str})
    if df['t'].isna().any():
        raise ValueError(f'{path}: only pointwise observations can be reloaded')
    graph = mesh.graph
    functionals = []
    for eid, t in zip(df['edge_id'], df['t']):
        k = graph.edge_index(eid)
        functionals.append(PointEval(GraphPoint(graph.edge_ids[k], float(t))))
    sigma = df['sigma'].to_numpy(dtype=float)
    return ObservationSet(mesh, functionals, df['y'].to_numpy(dtype=float), sigma**2)


def write_trace(path, result):
    df = pandas.DataFrame(result.trace(), columns=TRACE_COLUMNS)
    return _write(df, path)


def read_trace(path):
    return _read(path, TRACE_COLUMNS)
