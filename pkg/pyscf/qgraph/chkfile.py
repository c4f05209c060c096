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

import h5py
import numpy
from pyscf.lib.chkfile import load, dump
from pyscf.lib import H5FileWrap
from pyscf.qgraph.sampler import ChainConfig, ChainResult


def dump_chain(chkfile, result, key='qgraph', summaries=None):
    '''Save a ChainResult (and optional summary fields) in chkfile'''
    if h5py.is_hdf5(chkfile):
        with H5FileWrap(chkfile, 'a') as fh5:
            if key in fh5:
                del fh5[key]
    data = {
        'config': {k: v for k, v in result.config.to_dict().items() if v is not None},
        'samples': result.samples,
        'accepted': result.accepted.astype(numpy.int8),
        'tau': result.tau,
        'temperature': result.temperature,
        'phi': result.phi,
        'prior_quad': result.prior_quad,
        'nsolve': result.nsolve,
    }
    if summaries:
        data['summaries'] = {k: numpy.asarray(v) for k, v in summaries.items()}
    dump(chkfile, key, data)
    return chkfile


def load_chain(chkfile, mesh, key='qgraph'):
    '''Restore the ChainResult stored by dump_chain'''
    data = load(chkfile, key)
    if data is None:
        raise KeyError(f'{chkfile} has no chain under {key!r}')
    config = ChainConfig(**{k: _scalar(v) for k, v in data['config'].items()})
    samples = numpy.asarray(data['samples'])
    if samples.shape[1] != mesh.n_dof:
        raise ValueError(f'stored samples have {samples.shape[1]} DOFs; the mesh '
                         f'has {mesh.n_dof}')
    return ChainResult(mesh, config, samples,
                       numpy.asarray(data['accepted']).astype(bool),
                       numpy.asarray(data['tau']),
                       numpy.asarray(data['temperature']),
                       numpy.asarray(data['phi']),
                       numpy.asarray(data['prior_quad']),
                       int(data['nsolve']))


def _scalar(v):
    v = numpy.asarray(v).item()
    if isinstance(v, bytes):
        v = v.decode()
    return v
