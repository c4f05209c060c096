#!/usr/bin/env python
# Copyright 2014-2025 The PySCF Developers. All Rights Reserved.
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

NAME = 'pyscf_qgraph'
AUTHOR = 'Pyscf Developer'
AUTHOR_EMAIL = None
DESCRIPTION  = 'Bayesian inverse problems for elliptic operators on metric graphs'
DEPENDENCIES = ['pyscf', 'numpy', 'scipy', 'networkx', 'pandas', 'h5py']
VERSION = '0.1.0'

#######################################################################
# Unless not working, nothing below needs to be changed.
metadata = globals()
import os
from setuptools import setup, find_namespace_packages

topdir = os.path.abspath(os.path.join(__file__, '..'))
modules = find_namespace_packages(include=['pyscf.*'])

def get_readme():
    path = os.path.join(topdir, 'README.md')
    if os.path.isfile(path):
        with open(path, 'r', encoding='utf-8') as f:
            return f.read()
    return metadata.get('DESCRIPTION', None)

settings = {
    'name': metadata.get('NAME', None),
    'version': VERSION,
    'description': metadata.get('DESCRIPTION', None),
    'long_description': get_readme(),
    'long_description_content_type': 'text/markdown',
    'author': metadata.get('AUTHOR', None),
    'author_email': metadata.get('AUTHOR_EMAIL', None),
    'install_requires': metadata.get('DEPENDENCIES', []),
    'python_requires': '>=3.8',
    'entry_points': {
        'console_scripts': ['qgraph = pyscf.qgraph.cli:main'],
    },
}

setup(
    include_package_data=True,
    packages=modules,
    package_data={'pyscf.qgraph': ['data/*.json']},
    **settings
)
