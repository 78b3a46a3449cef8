# ----------------------------------------------------------------------------
# Copyright (c) 2024--,  covpack development team.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file COPYING.txt, distributed with this software.
# ----------------------------------------------------------------------------

from unittest import main

import numpy as np
import numpy.testing as npt

from covpack import oracle as orc
from covpack.distortion import hamming, AdditiveDistortion
from covpack.type_lab import RationalPmf
from covpack._testing import Tests


HAMMING = [[0, 1], [1, 0]]


class ClosedFormTests(Tests):
    def test_binary_entropy(self):
        self.assertEqual(orc.binary_entropy(0), 0)
        self.assertAlmostEqual(orc.binary_entropy(0.5), 1)
        with self.assertRaises(ValueError):
            orc.binary_entropy(1.5)

    def test_binary_hamming_rd(self):
        self.assertEqual(orc.binary_hamming_rd(0), 1)
        self.assertEqual(orc.binary_hamming_rd(0.5), 0)
        self.assertEqual(orc.binary_hamming_rd(0.7), 0)
        self.assertAlmostEqual(orc.binary_hamming_rd(0.11), 0.500084, delta=1e-6)
        self.assertEqual(orc.binary_hamming_rd(0.11), 1 - orc.binary_entropy(0.11))
        with self.assertRaises(ValueError):
            orc.binary_hamming_rd(-0.1)

    def test_d_max_d_min(self):
        self.assertAlmostEqual(orc.d_max([0.5, 0.5], HAMMING), 0.5)
        self.assertAlmostEqual(orc.d_max([0.8, 0.2], HAMMING), 0.2)
        self.assertEqual(orc.d_min([0.5, 0.5], HAMMING), 0)
        self.assertAlmostEqual(orc.d_min([0.5, 0.5], [[1, 2], [3, 1]]), 1)

    def test_accepts_package_types(self):
        pmf = RationalPmf.from_strings('1/2,1/2')
        self.assertAlmostEqual(orc.d_max(pmf, hamming()), 0.5)
        with self.assertRaises(ValueError):
            orc.d_max([0.5, 0.6], HAMMING)
        with self.assertRaises(ValueError):
            orc.d_max([1.0], HAMMING)


class BlahutArimotoTests(Tests):
    def test_matches_closed_form(self):
        for D in np.arange(0.01, 0.5, 0.02):
            pt = orc.blahut_arimoto([0.5, 0.5], HAMMING, D)
            self.assertTrue(pt.converged)
            self.assertAlmostEqual(pt.R, orc.binary_hamming_rd(D), delta=1e-6)
            self.assertAlmostEqual(pt.D, D, delta=1e-6)
            self.assertLessEqual(pt.s, 0)

    def test_reference_point(self):
        pt = orc.blahut_arimoto(RationalPmf.from_strings('1/2,1/2'), hamming(), 0.11)
        self.assertAlmostEqual(pt.R, 0.500084, delta=1e-6)

    def test_lossless_point(self):
        p = [0.2, 0.3, 0.5]
        pt = orc.blahut_arimoto(p, AdditiveDistortion([[0, 1, 1], [1, 0, 1], [1, 1, 0]]), 0)
        entropy = -sum(x * np.log2(x) for x in p)
        self.assertAlmostEqual(pt.R, entropy, places=5)

    def test_beyond_d_max(self):
        pt = orc.blahut_arimoto([0.8, 0.2], HAMMING, 0.2)
        self.assertEqual(pt.R, 0)
        self.assertEqual(pt.iterations, 0)
        self.assertEqual(orc.blahut_arimoto([0.5, 0.5], HAMMING, 3).R, 0)
        with self.assertRaises(ValueError):
            orc.blahut_arimoto([0.5, 0.5], HAMMING, -1)

    def test_no_convergence(self):
        pt = orc.blahut_arimoto([0.5, 0.5], HAMMING, 0.2, max_iterations=1)
        self.assertFalse(pt.converged)
        self.assertEqual(pt.iterations, 1)

    def test_rd_curve(self):
        grid = [0.05, 0.1, 0.2, 0.3, 0.4, 0.5]
        curve = orc.rd_curve([0.5, 0.5], HAMMING, grid)
        self.assertEqual(list(curve.columns), ['D_target', 'D', 'R', 'converged', 'iterations', 's'])
        npt.assert_allclose(curve['R'], [orc.binary_hamming_rd(D) for D in grid], atol=1e-6)
        # nonincreasing and convex along the grid
        r = curve['R'].to_numpy()
        self.assertTrue((np.diff(r) <= 1e-9).all())

    def test_convexity(self):
        p = [0.3, 0.7]
        d = [[0, 1], [2, 0]]
        grid = np.linspace(0.02, orc.d_max(p, d) - 0.02, 15)
        r = orc.rd_curve(p, d, grid)['R'].to_numpy()
        second = r[:-2] - 2 * r[1:-1] + r[2:]
        self.assertTrue((second >= -1e-6).all())
        self.assertTrue((np.diff(r) <= 1e-9).all())


if __name__ == "__main__":
    main()
