# ----------------------------------------------------------------------------
# Copyright (c) 2024--,  covpack development team.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file COPYING.txt, distributed with this software.
# ----------------------------------------------------------------------------

from unittest import TestCase
from os.path import join, dirname, abspath
from itertools import product
from fractions import Fraction
import logging

import numpy as np

from covpack.type_lab import type_class_array


class Tests(TestCase):
    def setUp(self):
        # disable logging; otherwise, the tests will print all the
        # logging in the functions
        logging.disable(logging.CRITICAL)

        test_data_dir = join(dirname(abspath(__file__)), 'tests', 'data')
        self.test_data_dir = test_data_dir
        # binary uniform source, Hamming, n' in {2,4,6,8,12}
        self.duality_binary = join(test_data_dir, 'duality_binary.config')
        # ternary source at n'=12 with an asymmetric matrix
        self.duality_ternary = join(test_data_dir, 'duality_ternary.config')
        # constant distortion matrix, values in {0, 1}
        self.duality_constant = join(test_data_dir, 'duality_constant.config')
        # binary exponent sweep at D=0.11
        self.exponent_binary = join(test_data_dir, 'exponent_binary.config')
        # small covering grid
        self.cover_small = join(test_data_dir, 'cover_small.config')
        # packing grid over the ball channel and BSC(0.05)
        self.pack_ball = join(test_data_dir, 'pack_ball.config')
        self.pack_bsc = join(test_data_dir, 'pack_bsc.config')
        # separation demo over BSC(0.03)
        self.separation_bsc = join(test_data_dir, 'separation_bsc.config')
        # a config with an unknown key
        self.bad_key = join(test_data_dir, 'bad_key.config')

    def tearDown(self):
        logging.disable(logging.NOTSET)

    def brute_force_excess(self, p, q, D, d):
        '''Pr(d(U, V) > n * D) by visiting every pair of the two type classes.'''
        us = type_class_array(p)
        vs = type_class_array(q)
        bad = sum(1 for u, v in product(us, vs) if d.evaluate(u, v) > p.n * Fraction(D))
        return Fraction(bad, len(us) * len(vs))

    def assert_wilson_covers(self, estimate, value, widths=1):
        '''Assert ``value`` lies within ``widths`` half-widths of the interval of ``estimate``.'''
        slack = (widths - 1) * estimate.half_width
        self.assertGreaterEqual(float(value), estimate.low - slack - 1e-12)
        self.assertLessEqual(float(value), estimate.high + slack + 1e-12)

    def random_pairs(self, nx, ny, n, count, random_seed=None):
        rng = np.random.default_rng(random_seed)
        return rng.integers(nx, size=(count, n)), rng.integers(ny, size=(count, n))
