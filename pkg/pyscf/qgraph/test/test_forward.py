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

import os
import tempfile
import unittest
import numpy
from pyscf.qgraph import graph
from pyscf.qgraph import forward
from pyscf.qgraph import assembly
from pyscf.qgraph import diagnostics
from pyscf.qgraph import csvfile
from pyscf.qgraph.assembly import Field, constant_field
from pyscf.qgraph.graph import GraphPoint
from pyscf.qgraph.forward import (ForwardModel, NoiseModel, ObservationSet,
                                  PointEval, WeightVector)

def setUpModule():
    global star, fsrc
    star = graph.build_mesh(graph.star(3, 1.), .1)
    fsrc = forward.make_source(star)

def tearDownModule():
    global star, fsrc
    del star, fsrc

def random_field(mesh, seed, scale=1.):
    rng = numpy.random.default_rng(seed)
    return Field(mesh, scale * rng.uniform(-1, 1, mesh.n_dof), 'u')


class KnownValues(unittest.TestCase):
    def test_validation(self):
        with self.assertRaises(ValueError):
            ForwardModel(star, fsrc, kappa=0., verbose=0)
        with self.assertRaises(ValueError):
            ForwardModel(star, fsrc, beta=.5, verbose=0)
        with self.assertRaises(ValueError):
            forward.make_source(star, 'nope')

    def test_make_source(self):
        z = star.coords
        self.assertAlmostEqual(abs(fsrc.values - (z[:,0]**2 - z[:,1]**2)).max(), 0, 14)
        self.assertEqual(fsrc.role, 'f')
        one = forward.make_source(star, 'constant')
        self.assertTrue((one.values == 1).all())
        with tempfile.TemporaryDirectory() as tmpdir:
            path = os.path.join(tmpdir, 'f.csv')
            csvfile.write_field(path, fsrc)
            f2 = forward.make_source(star, path)
        self.assertEqual(f2.role, 'f')
        self.assertTrue(numpy.array_equal(f2.values, fsrc.values))

    def test_constant_source(self):
        one = constant_field(star, 1., 'f')
        for beta in (1., 1.5, 2.):
            fwd = ForwardModel(star, one, kappa=1., beta=beta, verbose=0)
            p = fwd(random_field(star, 31, 2.))
            self.assertAlmostEqual(abs(p.values - 1).max(), 0, 8)
        fwd = ForwardModel(star, one, kappa=1., beta=1., verbose=0)
        fwd.route = 'spectral'
        p = fwd(random_field(star, 32))
        self.assertAlmostEqual(abs(p.values - 1).max(), 0, 8)

    def test_route_equivalence(self):
        fwd = ForwardModel(star, fsrc, verbose=0)
        for seed in (33, 34):
            self.assertTrue(diagnostics.route_equivalence(fwd, random_field(star, seed)) < 1e-8)

    def test_linearity_in_source(self):
        u = random_field(star, 35)
        f1 = random_field(star, 36).values
        f2 = random_field(star, 37).values
        for beta in (1., 1.5):
            p1 = ForwardModel(star, f1, beta=beta, verbose=0).solve(u).values
            p2 = ForwardModel(star, f2, beta=beta, verbose=0).solve(u).values
            p12 = ForwardModel(star, f1 + 2 * f2, beta=beta, verbose=0).solve(u).values
            self.assertAlmostEqual(abs(p12 - p1 - 2 * p2).max(), 0, 10)

    def test_nsolve(self):
        fwd = ForwardModel(star, fsrc, verbose=0)
        obs = forward.make_synthetic(fwd, constant_field(star, 0.), NoiseModel(), rng_seed=1)
        self.assertEqual(fwd.nsolve, 1)
        phi = forward.Potential(fwd, obs)
        for k in range(3):
            phi(random_field(star, 38 + k))
        self.assertEqual(fwd.nsolve, 4)
        forward.forward_map(fwd, constant_field(star, 0.))
        self.assertEqual(fwd.nsolve, 5)

    def test_observe(self):
        mesh = graph.build_mesh(graph.interval(1.), .25)
        p = numpy.arange(mesh.n_dof, dtype=float)**2
        i, j = mesh.elem_dofs[1]
        obs = ObservationSet(mesh, [PointEval(GraphPoint(0, .375))], [0.], [1.])
        self.assertAlmostEqual(forward.observe(p, obs)[0], .5 * (p[i] + p[j]), 14)
        # node points give the nodal value
        obs = ObservationSet(mesh, [PointEval(GraphPoint(0, .25)),
                                    PointEval(GraphPoint(0, 0.))], [0., 0.], [1., 1.])
        self.assertTrue(numpy.array_equal(forward.observe(p, obs),
                                          [p[mesh.dofmap[0][1]], p[mesh.dofmap[0][0]]]))

        M = assembly.assemble_mass(star)
        q = random_field(star, 41).values
        row = M[5].toarray().ravel()
        obs = ObservationSet(star, [WeightVector(row)], [0.], [1.])
        self.assertAlmostEqual(forward.observe(q, obs)[0], (M @ q)[5], 13)
        with self.assertRaises(ValueError):
            ObservationSet(star, [WeightVector(row[:-1])], [0.], [1.])

        center = star.graph.vertex_index('c')
        pts = [PointEval(GraphPoint(k, 0.)) for k in range(3)]
        obs = ObservationSet(star, pts, numpy.zeros(3), numpy.ones(3))
        self.assertTrue(numpy.allclose(forward.observe(q, obs), q[center], atol=0, rtol=0))

    def test_empty_observations(self):
        H = forward.observation_matrix(star, [])
        self.assertEqual(H.shape, (0, star.n_dof))
        obs = ObservationSet(star, [], [], numpy.zeros(0))
        fwd = ForwardModel(star, fsrc, verbose=0)
        self.assertEqual(forward.Potential(fwd, obs)(random_field(star, 42)), 0.)

    def test_potential(self):
        self.assertEqual(forward.potential([1., 2.], [1., 2.], [1., 1.]), 0.)
        self.assertAlmostEqual(forward.potential([0.], [1.], [.25]), 2., 14)
        self.assertAlmostEqual(forward.potential([0., 0.], [1., 1.], numpy.eye(2)), 1., 14)
        rng = numpy.random.default_rng(43)
        g, y = rng.standard_normal((2, 6))
        var = rng.uniform(.1, 1., 6)
        phi = forward.potential(g, y, var)
        self.assertAlmostEqual(forward.potential(g, y, numpy.diag(var)), phi, 12)
        self.assertAlmostEqual(forward.potential(g, y, 4 * var), phi / 4, 12)
        perm = rng.permutation(6)
        self.assertAlmostEqual(forward.potential(g[perm], y[perm], var[perm]), phi, 12)
        with self.assertRaises(ValueError):
            forward.potential(g, y, numpy.hstack((var[:-1], [0.])))
        with self.assertRaises(ValueError):
            forward.potential(g, y[:-1], var[:-1])
        with self.assertRaises(ValueError):
            forward.potential([0., 0.], [1., 1.], [[1., 2.], [2., 1.]])

    def test_potential_gradient(self):
        mesh = graph.build_mesh(graph.star(3, 1.), .25)
        fwd = ForwardModel(mesh, forward.make_source(mesh), verbose=0)
        obs = forward.make_synthetic(fwd, random_field(mesh, 44, .5), NoiseModel(), rng_seed=2)
        phi = forward.Potential(fwd, obs)
        u = random_field(mesh, 45, .5).values
        grad = phi.gradient(u)
        eps = 1e-6
        for k in (0, 3, 7, mesh.n_dof - 1):
            du = numpy.zeros(mesh.n_dof)
            du[k] = eps
            fd = (phi(u + du) - phi(u - du)) / (2 * eps)
            self.assertAlmostEqual(grad[k], fd, delta=1e-5 * max(1., abs(fd)))
        fwd.beta = 1.5
        with self.assertRaises(NotImplementedError):
            phi.gradient(u)

    def test_make_synthetic(self):
        fwd = ForwardModel(star, fsrc, verbose=0)
        u0 = random_field(star, 46)
        with self.assertRaises(ValueError):
            forward.make_synthetic(fwd, u0, NoiseModel(0., 0.), rng_seed=1)
        with self.assertRaises(ValueError):
            NoiseModel(-.1, .1)
        obs = forward.make_synthetic(fwd, u0, NoiseModel(0., .1), rng_seed=1)
        self.assertEqual(obs.m, star.n_dof)
        self.assertAlmostEqual(abs(obs.Sigma - .01).max(), 0, 15)
        obs2 = forward.make_synthetic(fwd, u0, NoiseModel(0., .1), rng_seed=1)
        self.assertTrue(numpy.array_equal(obs.y, obs2.y))
        self.assertTrue(obs.same_design(obs2))
        obs3 = forward.make_synthetic(fwd, u0, NoiseModel(0., .1), rng_seed=2)
        self.assertFalse(numpy.array_equal(obs.y, obs3.y))
        # all-DOF observations reproduce the nodal solution
        p0 = fwd.solve(u0).values
        self.assertAlmostEqual(abs(obs.truth - p0).max(), 0, 14)

        obs = forward.make_synthetic(fwd, u0, NoiseModel(.05, .1), rng_seed=1)
        self.assertAlmostEqual(abs(obs.sigma - (.05 * abs(p0) + .1)).max(), 0, 14)
        pts = [GraphPoint(0, .5), GraphPoint(1, .25)]
        obs = forward.make_synthetic(fwd, u0, NoiseModel(), at=pts, rng_seed=1)
        self.assertEqual(obs.m, 2)

    def test_standardized_residuals(self):
        mesh = graph.build_mesh(graph.interval(1.), .0002)
        fwd = ForwardModel(mesh, forward.make_source(mesh), verbose=0)
        obs = forward.make_synthetic(fwd, constant_field(mesh, 0.), NoiseModel(.05, .1),
                                     rng_seed=47)
        z = (obs.y - obs.truth) / obs.sigma
        n = z.size
        self.assertTrue(n > 5000)
        self.assertTrue(abs(z.mean()) < 4 / numpy.sqrt(n))
        self.assertTrue(abs(z.var() - 1) < 4 * numpy.sqrt(2. / n))

    def test_with_data(self):
        fwd = ForwardModel(star, fsrc, verbose=0)
        obs = forward.make_synthetic(fwd, constant_field(star, 0.), NoiseModel(), rng_seed=3)
        obs2 = obs.with_data(obs.y + 1)
        self.assertTrue(obs.same_design(obs2))
        self.assertTrue(numpy.array_equal(obs2.y, obs.y + 1))
        with self.assertRaises(ValueError):
            obs.with_data(obs.y[:-1])
        other = ObservationSet(star, obs.functionals, obs.y, 2 * obs.Sigma)
        self.assertFalse(obs.same_design(other))

    def test_lipschitz(self):
        mesh = graph.build_mesh(graph.star(3, 1.), .2)
        fwd = ForwardModel(mesh, forward.make_source(mesh), verbose=0)
        obs = forward.make_synthetic(fwd, constant_field(mesh, 0.), NoiseModel(), rng_seed=4)
        def pairs(seed):
            rng = numpy.random.default_rng(seed)
            return [(rng.uniform(-1, 1, mesh.n_dof), rng.uniform(-1, 1, mesh.n_dof))
                    for k in range(200)]
        c = diagnostics.forward_lipschitz(fwd, obs, pairs(48))
        bound = diagnostics.lipschitz_bound(fwd, obs)
        self.assertTrue(0 < c <= bound * (1 + 1e-9))
        # same trials, same constant
        self.assertEqual(diagnostics.forward_lipschitz(fwd, obs, pairs(48)), c)
        u = numpy.random.default_rng(49).uniform(-1, 1, mesh.n_dof)
        self.assertEqual(diagnostics.forward_lipschitz(fwd, obs, [(u, u)]), 0.)

        fwd15 = ForwardModel(mesh, fwd.f, beta=1.5, verbose=0)
        c15 = diagnostics.forward_lipschitz(fwd15, obs, pairs(50)[:20])
        self.assertTrue(numpy.isfinite(c15) and c15 > 0)
        with self.assertRaises(ValueError):
            diagnostics.lipschitz_bound(fwd15, obs)
        with self.assertRaises(ValueError):
            diagnostics.lipschitz_bound(ForwardModel(mesh, fwd.f, kappa=.5, verbose=0))

    def test_observation_convergence(self):
        # pointwise observations of cos(pi x)/(1 + pi^2) converge at O(h^2)
        xs = (.1, .3, .6)
        errors = []
        for h in (.02, .01, .005):
            mesh = graph.build_mesh(graph.interval(1.), h)
            f = Field(mesh, numpy.cos(numpy.pi * mesh.coords[:,0]), 'f')
            fwd = ForwardModel(mesh, f, kappa=1., beta=1., verbose=0)
            obs = ObservationSet(mesh, [PointEval(GraphPoint(0, x)) for x in xs],
                                 numpy.zeros(len(xs)), numpy.ones(len(xs)))
            g = forward.observe(fwd.solve(constant_field(mesh, 0.)), obs)
            exact = numpy.cos(numpy.pi * numpy.array(xs)) / (1 + numpy.pi**2)
            errors.append(abs(g - exact).max())
        errors = numpy.array(errors)
        self.assertTrue(errors[0] < 1e-3)
        orders = numpy.log2(errors[:-1] / errors[1:])
        self.assertTrue(abs(orders - 2).max() <= .2)


if __name__ == "__main__":
    print("Full Tests for the forward model")
    unittest.main()
