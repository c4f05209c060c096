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
Bayesian inverse problems on compact metric graphs

Recover the log-diffusion coefficient u of L_u^beta p = f,
L_u = kappa^2 - div(e^u grad), from noisy observations of p under a
Whittle-Matern prior, with an adaptive temperature-annealed pCN sampler.
'''

__version__ = '0.1.0'

from pyscf.qgraph.graph import (GraphError, GraphPoint, MetricGraph, Mesh,
                                load_graph, build_mesh, locate)
from pyscf.qgraph.assembly import (Field, OperatorPair, assemble_mass,
                                   assemble_stiffness, solve_elliptic)
from pyscf.qgraph.spectral import (EigenBasis, eigendecompose, solve_fractional,
                                   weyl_ratio, eigen_perturbation_check)
from pyscf.qgraph.prior import (WhittleMaternPrior, PriorSpec, sample_prior,
                                prior_precision_quadratic, covariance_diag)
from pyscf.qgraph.forward import (ForwardModel, ForwardSpec, PointEval,
                                  WeightVector, ObservationSet, NoiseModel,
                                  forward_map, observe, potential,
                                  make_synthetic, make_source)
from pyscf.qgraph.sampler import (ChainConfig, ChainResult, AdaptivePCN,
                                  ForwardSolveError, IllConditionedError,
                                  pcn_step, run_chain, posterior_summaries,
                                  HellingerEstimator, hellinger_estimate)
