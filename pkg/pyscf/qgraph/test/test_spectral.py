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
import scipy.linalg
from pyscf.qgraph import graph
from pyscf.qgraph import assembly
from pyscf.qgraph import spectral
from pyscf.qgraph import diagnostics
from pyscf.qgraph.assembly import Field, constant_field

def setUpModule():
    global star, interval
    star = graph.build_mesh(graph.star(3, 1.), .1)
    interval = graph.build_mesh(graph.interval(1.), .01)

def tearDownModule():
    global star, interval
    del star, interval

def random_field(mesh, seed, scale=1.):
    rng = numpy.random.default_rng(seed)
    return Field(mesh, scale * rng.uniform(-1, 1, mesh.n_dof), 'u')

def dense_operator(mesh, u, kappa):
    '''Element-by-element dense assembly, e^u taken at the element midpoint'''
    n = mesh.n_dof
    K = numpy.zeros((n, n))
    M = numpy.zeros((n, n))
    for k, dofs in enumerate(mesh.dofmap):
        t = mesh.node_t[k]
        for e in range(len(t) - 1):
            i, j = dofs[e], dofs[e+1]
            w = t[e+1] - t[e]
            c = numpy.exp((u[i] + u[j]) / 2)
            for a, b, m, s in ((i, i, w/3, 1), (j, j, w/3, 1),
                               (i, j, w/6, -1), (j, i, w/6, -1)):
                M[a,b] += m
                K[a,b] += s * c / w + kappa**2 * m
    return K, M


class KnownValues(unittest.TestCase):
    def test_interval_spectrum(self):
        op = assembly.assemble_stiffness(interval, constant_field(interval, 0.), 1.)
        lam = spectral.eigendecompose(op).eigenvalues
        ref = 1 + numpy.pi**2 * numpy.arange(5)**2
        # linear elements overestimate lambda_j by about (j-1)^2 pi^2 h^2 / 12
        self.assertTrue(abs(lam[:4] / ref[:4] - 1).max() < 1e-3)
        self.assertTrue(abs(lam[4] / ref[4] - 1) < 2e-3)
        fine = graph.build_mesh(graph.interval(1.), .005)
        op = assembly.assemble_stiffness(fine, constant_field(fine, 0.), 1.)
        lam = spectral.eigenvalues(op)
        self.assertTrue(abs(lam[:5] / ref - 1).max() < 1e-3)

    def test_lambda1(self):
        for name in ('interval', 'star3', 'letter'):
            mesh = graph.build_mesh(graph.load_graph(f'builtin:{name}'), .25)
            for kappa in (1., .5):
                op = assembly.assemble_stiffness(mesh, random_field(mesh, 11), kappa)
                basis = spectral.eigendecompose(op)
                self.assertAlmostEqual(basis.eigenvalues[0], kappa**2, 9)

    def test_eigenbasis(self):
        op = assembly.assemble_stiffness(star, random_field(star, 12), 1.)
        basis = spectral.eigendecompose(op)
        lam = basis.eigenvalues
        E = basis.vectors
        self.assertTrue((numpy.diff(lam) >= 0).all())
        self.assertTrue(lam[0] >= 1 - 1e-9)
        self.assertTrue(diagnostics.orthonormality(basis) < 1e-9)
        res = op.K @ E - op.M @ E * lam
        self.assertTrue(abs(res).max(axis=0).max() <= 1e-8 * lam[-1])
        for k in range(E.shape[1]):
            col = E[:,k]
            first = numpy.nonzero(abs(col) > 1e-10 * abs(col).max())[0][0]
            self.assertTrue(col[first] > 0)
        # deterministic
        basis2 = spectral.eigendecompose(op)
        self.assertTrue(numpy.array_equal(basis.eigenvalues, basis2.eigenvalues))
        phi = basis.eigenfunction(1)
        self.assertEqual(phi.role, 'eigen')
        self.assertTrue(numpy.array_equal(phi.values, E[:,1]))

    def test_independent_oracle(self):
        u = numpy.zeros(star.n_dof)
        K, M = dense_operator(star, u, 1.)
        ref = scipy.linalg.eigh(K, M, eigvals_only=True)
        op = assembly.assemble_stiffness(star, Field(star, u), 1.)
        lam = spectral.eigendecompose(op).eigenvalues
        self.assertAlmostEqual(abs(lam - ref).max() / ref.max(), 0, 8)
        u = random_field(star, 13).values
        K, M = dense_operator(star, u, 1.)
        op = assembly.assemble_stiffness(star, Field(star, u), 1.)
        self.assertAlmostEqual(abs(op.K.toarray() - K).max(), 0, 10)
        self.assertAlmostEqual(abs(op.M.toarray() - M).max(), 0, 14)

    def test_fractional_routes(self):
        u = random_field(star, 14)
        f = random_field(star, 15).values
        op = assembly.assemble_stiffness(star, u, 1.)
        basis = spectral.eigendecompose(op)
        p1 = spectral.solve_fractional(basis, f, 1.).values
        p_ell = assembly.solve_elliptic(op, f).values
        self.assertTrue(diagnostics.relative_m_error(op.M, p1, p_ell) < 1e-8)
        self.assertTrue(diagnostics.double_solve_equivalence(op, f) < 1e-8)
        with self.assertRaises(ValueError):
            spectral.solve_fractional(basis, f, .5)

    def test_constant_mode(self):
        op = assembly.assemble_stiffness(star, random_field(star, 16), 1.)
        basis = spectral.eigendecompose(op)
        p = spectral.solve_fractional(basis, constant_field(star, 1., 'f'), 1.5)
        self.assertAlmostEqual(abs(p.values - 1).max(), 0, 8)
        kappa = .5
        op = assembly.assemble_stiffness(star, random_field(star, 17), kappa)
        basis = spectral.eigendecompose(op)
        p = spectral.solve_fractional(basis, constant_field(star, 2., 'f'), 2.)
        self.assertAlmostEqual(abs(p.values - 2 * kappa**-4).max(), 0, 6)

    def test_monotone_in_beta(self):
        op = assembly.assemble_stiffness(star, random_field(star, 18), 1.)
        basis = spectral.eigendecompose(op)
        f = random_field(star, 19)
        norms = [numpy.sqrt(p @ (op.M @ p)) for p in
                 (spectral.solve_fractional(basis, f, b).values
                  for b in (1., 1.25, 1.5, 2.))]
        self.assertTrue((numpy.diff(norms) <= 1e-12).all())

    def test_parseval(self):
        op = assembly.assemble_stiffness(star, random_field(star, 20), 1.)
        basis = spectral.eigendecompose(op)
        self.assertTrue(diagnostics.parseval(basis, random_field(star, 21)) < 1e-8)

    def test_weyl_interval(self):
        op = assembly.assemble_stiffness(interval, constant_field(interval, 0.), 1.)
        lower, upper = spectral.weyl_ratio(spectral.eigendecompose(op),
                                           constant_field(interval, 0.))
        self.assertAlmostEqual(lower, 1., 9)
        self.assertTrue(.9 * numpy.pi**2 < upper < 1.25 * numpy.pi**2)
        fine = graph.build_mesh(graph.interval(1.), .005)
        op = assembly.assemble_stiffness(fine, constant_field(fine, 0.), 1.)
        lower2, upper2 = spectral.weyl_ratio(spectral.eigendecompose(op),
                                             constant_field(fine, 0.))
        self.assertTrue(abs(upper2 / upper - 1) < .05)
        self.assertTrue(abs(lower2 / lower - 1) < .05)

    def test_weyl_bracketing(self):
        mesh = graph.build_mesh(graph.star(3, 1.), .02)
        rng = numpy.random.default_rng(22)
        cs = rng.uniform(-1, 1, 50)
        rows = diagnostics.weyl_bracket(mesh, 1., numpy.hstack(([0.], cs)))
        lo0, up0 = rows[0, 1:]
        self.assertTrue(numpy.isfinite(rows).all())
        self.assertTrue((rows[:,1:] > 0).all())
        self.assertTrue((rows[1:,1] >= lo0 * (1 - 1e-9)).all())
        self.assertTrue((rows[1:,2] <= up0 * (1 + 1e-9)).all())

    def test_eigen_perturbation(self):
        u1 = random_field(star, 23)
        op1 = assembly.assemble_stiffness(star, u1, 1.)
        self.assertEqual(spectral.eigen_perturbation_check(op1, op1, u1, u1, 1.5), 0.)

        c, delta, s = .3, .2, 1.5
        u1 = constant_field(star, c)
        u2 = constant_field(star, c + delta)
        op1 = assembly.assemble_stiffness(star, u1, 1.)
        op2 = assembly.assemble_stiffness(star, u2, 1.)
        lam1 = spectral.eigenvalues(op1)
        lam2 = 1. + numpy.exp(delta) * (lam1 - 1.)
        ref = abs(lam1**-s - lam2**-s).max() / (numpy.exp((s + 2) * (c + delta)) * delta)
        C = spectral.eigen_perturbation_check(op1, op2, u1, u2, s)
        self.assertAlmostEqual(C / ref, 1., 6)

        rng = numpy.random.default_rng(24)
        mesh = graph.build_mesh(graph.star(3, 1.), .1)
        cmax = 0.
        for k in range(100):
            u1 = Field(mesh, rng.uniform(-1, 1, mesh.n_dof))
            u2 = Field(mesh, rng.uniform(-1, 1, mesh.n_dof))
            op1 = assembly.assemble_stiffness(mesh, u1, 1.)
            op2 = assembly.assemble_stiffness(mesh, u2, 1.)
            cmax = max(cmax, spectral.eigen_perturbation_check(op1, op2, u1, u2, 1.5))
        self.assertTrue(numpy.isfinite(cmax))
        self.assertTrue(0 < cmax < 1.)


if __name__ == "__main__":
    print("Full Tests for spectral solves")
    unittest.main()
