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

import unittest
import numpy
from pyscf.qgraph import graph
from pyscf.qgraph import prior
from pyscf.qgraph import diagnostics
from pyscf.qgraph.assembly import Field

NSAMPLE = 20000

def setUpModule():
    global star, pr, draws
    star = graph.build_mesh(graph.star(3, 1.), .1)
    pr = prior.WhittleMaternPrior(star, kappa0=1., a=.5, verbose=0).build()
    rng = numpy.random.default_rng(101)
    draws = numpy.array([pr.sample(rng).values for k in range(NSAMPLE)])

def tearDownModule():
    global star, pr, draws
    del star, pr, draws


class KnownValues(unittest.TestCase):
    def test_validation(self):
        for kw in ({'kappa0': 0.}, {'kappa0': -1.}, {'a': 0.}, {'alpha': .75},
                   {'alpha': .5}):
            with self.assertRaises(ValueError):
                prior.WhittleMaternPrior(star, verbose=0, **kw)
        p = prior.WhittleMaternPrior(star, alpha=.8, verbose=0)
        with self.assertRaises(ValueError):
            p.check_inversion()
        prior.WhittleMaternPrior(star, alpha=1., verbose=0).check_inversion()

    def test_deterministic(self):
        u1 = prior.sample_prior(pr, 5)
        u2 = prior.sample_prior(pr, 5)
        self.assertEqual(u1.role, 'u')
        self.assertTrue(numpy.array_equal(u1.values, u2.values))
        u3 = prior.sample_prior(pr, 6)
        self.assertFalse(numpy.array_equal(u1.values, u3.values))

    def test_covariance_routes(self):
        self.assertTrue(diagnostics.prior_covariance_routes(pr) < 1e-8)
        C = pr.covariance()
        self.assertAlmostEqual(abs(C - C.T).max() / abs(C).max(), 0, 12)

    def test_sample_moments(self):
        C = pr.covariance()
        mean = draws.mean(axis=0)
        se = numpy.sqrt(C.diagonal() / NSAMPLE)
        self.assertTrue((abs(mean) < 4 * se).all())
        Cemp = numpy.cov(draws, rowvar=False)
        err = numpy.linalg.norm(Cemp - C) / numpy.linalg.norm(C)
        self.assertTrue(err < .05)

    def test_covariance_diag(self):
        var = prior.covariance_diag(pr)
        self.assertEqual(var.role, 'var')
        self.assertTrue((var.values > 0).all())
        self.assertAlmostEqual(abs(var.values - pr.covariance().diagonal()).max(), 0, 12)
        emp = draws.var(axis=0)
        self.assertTrue(abs(emp / var.values - 1).max() < .05)

    def test_precision_quadratic(self):
        n = star.n_dof
        q = numpy.array([2 * prior.prior_precision_quadratic(pr, u)
                         for u in draws[:5000]])
        # u^T Q0 u of a prior draw is chi-squared with n_dof degrees of freedom
        self.assertTrue(abs(q.mean() - n) < 3 * numpy.sqrt(2. * n / len(q)))

        u = Field(star, draws[0])
        q1 = pr.precision_quadratic(u)
        self.assertAlmostEqual(pr.precision_quadratic(2 * draws[0]) / q1, 4., 10)
        self.assertEqual(pr.precision_quadratic(numpy.zeros(n)), 0.)
        # Q0 u agrees with the quadratic form
        self.assertAlmostEqual(.5 * draws[0] @ pr.precision_action(u) / q1, 1., 9)
        # Q0 C0 = I
        QC = numpy.array([pr.precision_action(c) for c in pr.covariance().T]).T
        self.assertAlmostEqual(abs(QC - numpy.eye(n)).max(), 0, 7)

    def test_alpha_routes_agree(self):
        p2 = prior.WhittleMaternPrior(star, kappa0=1., a=.5, alpha=2., verbose=0)
        u = Field(star, draws[1])
        q = p2.precision_quadratic(u)
        self.assertAlmostEqual(.5 * u.values @ p2.precision_action(u) / q, 1., 9)
        w = p2.basis.coefficients(p2.transform_noise(u.values))
        self.assertAlmostEqual(abs(w * p2.basis.eigenvalues**2 - u.values).max(), 0, 8)

    def test_smoothness(self):
        p1 = prior.WhittleMaternPrior(star, kappa0=1., a=.5, alpha=1., verbose=0)
        p1.route = 'spectral'
        p2 = prior.WhittleMaternPrior(star, kappa0=1., a=.5, alpha=2., verbose=0)
        K = p1.op0.K
        M = p1.op0.M
        rng = numpy.random.default_rng(103)
        for k in range(50):
            xi = rng.standard_normal(star.n_dof)
            u1 = p1.transform_noise(xi)
            u2 = p2.transform_noise(xi)
            r1 = (u1 @ (K @ u1)) / (u1 @ (M @ u1))
            r2 = (u2 @ (K @ u2)) / (u2 @ (M @ u2))
            self.assertTrue(r2 < r1)

    def test_boundary_variance(self):
        mesh = graph.build_mesh(graph.interval(5.), .05)
        p = prior.WhittleMaternPrior(mesh, kappa0=2., a=1., verbose=0)
        var = p.covariance_diag().values
        mid = int(numpy.argmin(abs(mesh.coords[:,0] - 2.5)))
        self.assertTrue(var[0] > var[mid])
        self.assertTrue(var[1] > var[mid])


if __name__ == "__main__":
    print("Full Tests for Whittle-Matern priors")
    unittest.main()
