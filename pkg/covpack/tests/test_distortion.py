# ----------------------------------------------------------------------------
# Copyright (c) 2024--,  covpack development team.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file COPYING.txt, distributed with this software.
# ----------------------------------------------------------------------------

from unittest import main
from fractions import Fraction

import numpy as np

from covpack import distortion as dt
from covpack.type_lab import (TypeVector, LogProb, EnumerationBudgetError, enumerate_types, type_class_size,
                              sample_uniform, random_permutation, apply_permutation)
from covpack._testing import Tests


ASYMMETRIC = [[0, 1, 2], [1, 0, '1/2'], [3, 1, 0]]


class DistortionFunctionTests(Tests):
    def setUp(self):
        super().setUp()
        self.ham = dt.hamming(3)
        self.asym = dt.AdditiveDistortion(ASYMMETRIC)
        self.worst = dt.worst_letter(ASYMMETRIC)

    def test_hamming(self):
        self.assertEqual(self.ham.evaluate([0, 1, 1], [1, 1, 0]), 2)
        self.assertTrue(self.ham.is_additive)
        self.assertEqual(self.ham.max_letter, 1)

    def test_additive_matrix(self):
        self.assertEqual(self.asym.scale, 2)
        self.assertEqual(self.asym.evaluate([1, 2, 0], [2, 0, 0]), Fraction(7, 2))
        with self.assertRaises(ValueError):
            dt.AdditiveDistortion([[0, -1], [1, 0]])
        with self.assertRaises(ValueError):
            dt.AdditiveDistortion([[0, 1], [1]])

    def test_worst_letter(self):
        self.assertFalse(self.worst.is_additive)
        # the worst pair present is (2, 0) with distortion 3
        self.assertEqual(self.worst.evaluate([1, 2, 0], [2, 0, 0]), 9)
        self.assertEqual(self.worst.evaluate([0, 1], [0, 1]), 0)

    def test_exceeds_batch(self):
        xs, ys = self.random_pairs(3, 3, 7, 200, 0)
        for d in (self.ham, self.asym, self.worst):
            for D in (0, Fraction(1, 3), Fraction(1, 2), 1):
                expected = [d.evaluate(x, y) > 7 * Fraction(D) for x, y in zip(xs, ys)]
                self.assertEqual(list(d.exceeds_batch(xs, ys, D)), expected)

    def test_ties_are_within(self):
        # distortion exactly n * D does not exceed
        self.assertFalse(self.ham.exceeds([0, 0, 0, 0], [1, 0, 0, 0], Fraction(1, 4)))
        self.assertTrue(self.ham.exceeds([0, 0, 0, 0], [1, 1, 0, 0], Fraction(1, 4)))
        with self.assertRaises(ValueError):
            self.ham.exceeds_batch([[0, 1]], [[0, 1]], -1)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(1)
        for d in (self.ham, self.asym, self.worst):
            xs, ys = self.random_pairs(3, 3, 9, 1000, rng)
            for x, y in zip(xs, ys):
                perm = random_permutation(9, rng)
                self.assertEqual(d.evaluate(apply_permutation(perm, x), apply_permutation(perm, y)),
                                 d.evaluate(x, y))

    def test_symbols_out_of_range(self):
        ham = dt.hamming()
        for x, y in [([0, 2], [0, 1]), ([0, 1], [-1, 1]), ([0, -1], [0, 0])]:
            with self.assertRaisesRegex(ValueError, 'outside'):
                ham.evaluate(x, y)
            with self.assertRaisesRegex(ValueError, 'outside'):
                ham.exceeds_batch([x], [y], 0)
        with self.assertRaisesRegex(ValueError, 'outside'):
            self.worst.evaluate([0, 3], [0, 0])
        # a 2x3 matrix takes reproduction symbol 2 but not source symbol 2
        wide = dt.AdditiveDistortion([[0, 1, 1], [1, 0, 1]])
        self.assertEqual(wide.evaluate([0, 1], [2, 2]), 2)
        with self.assertRaises(ValueError):
            wide.evaluate([2, 1], [0, 0])


class ExcessProbTests(Tests):
    def setUp(self):
        super().setUp()
        self.ham = dt.hamming()

    def test_fixed_y(self):
        self.assertEqual(dt.excess_prob_fixed_y(TypeVector((1, 1)), [0, 1], 0, self.ham), Fraction(1, 2))
        self.assertEqual(dt.excess_prob_fixed_y(TypeVector((2, 2)), [0, 0, 1, 1], 0, self.ham), Fraction(5, 6))
        self.assertEqual(dt.excess_prob_fixed_y(TypeVector((3, 1)), [0, 1, 1, 0], 1, self.ham), 0)
        with self.assertRaises(ValueError):
            dt.excess_prob_fixed_y(TypeVector((1, 1)), [0, 1, 1], 0, self.ham)

    def test_fixed_u(self):
        self.assertEqual(dt.excess_prob_fixed_u([0, 1], TypeVector((1, 1)), 0, self.ham), Fraction(1, 2))
        self.assertEqual(dt.excess_prob_fixed_u([0, 0], TypeVector((0, 2)), 1, self.ham), 0)
        self.assertEqual(dt.excess_prob_fixed_u([0, 0], TypeVector((0, 2)), Fraction(1, 2), self.ham), 1)

    def test_fixed_types_match_distortion(self):
        # the random side and the fixed sequence must fit the alphabets of d
        with self.assertRaisesRegex(ValueError, 'do not fit'):
            dt.excess_prob_fixed_y(TypeVector((1, 1, 1)), [0, 1, 0], 0, self.ham)
        with self.assertRaisesRegex(ValueError, 'do not fit'):
            dt.excess_prob_fixed_u([0, 1, 0], TypeVector((1, 1, 1)), 0, self.ham)
        with self.assertRaisesRegex(ValueError, 'outside'):
            dt.excess_prob_fixed_y(TypeVector((1, 1)), [0, 2], 0, self.ham)
        with self.assertRaisesRegex(ValueError, 'outside'):
            dt.excess_prob_fixed_u([-1, 0], TypeVector((1, 1)), 0, self.ham)
        wide = dt.AdditiveDistortion([[0, 1, 1], [1, 0, 1]])
        self.assertEqual(dt.excess_prob_fixed_y(TypeVector((1, 1)), [2, 2], 0, wide), 1)

    def test_fixed_paths_agree(self):
        # enumeration and the joint-type reduction give the same rationals
        d = dt.AdditiveDistortion(ASYMMETRIC)
        p = TypeVector((2, 3, 3))
        y = [0, 0, 1, 2, 2, 2, 1, 0]
        u = [2, 1, 0, 1, 1, 2, 0, 2]
        for D in (0, Fraction(1, 4), Fraction(1, 2), 1):
            self.assertEqual(dt.excess_prob_fixed_y(p, y, D, d),
                             dt.excess_prob_fixed_y(p, y, D, d, limit=1))
            self.assertEqual(dt.excess_prob_fixed_u(u, p, D, d),
                             dt.excess_prob_fixed_u(u, p, D, d, limit=1))

    def test_fixed_y_non_additive_budget(self):
        with self.assertRaisesRegex(EnumerationBudgetError, 'enumeration too large'):
            dt.excess_prob_fixed_y(TypeVector((3, 3)), [0, 1, 0, 1, 0, 1], 0, dt.worst_letter([[0, 1], [1, 0]]),
                                   limit=2)

    def test_both_random(self):
        self.assertEqual(dt.excess_prob_both_random(TypeVector((1, 1)), TypeVector((1, 1)), 0, self.ham),
                         Fraction(1, 2))
        self.assertEqual(dt.excess_prob_both_random(TypeVector((2, 2)), TypeVector((2, 2)), 0, self.ham),
                         Fraction(5, 6))
        self.assertEqual(dt.excess_prob_both_random(TypeVector((1, 1)), TypeVector((2, 0)), 0, self.ham), 1)

    def test_both_random_brute_force(self):
        asym = dt.AdditiveDistortion(ASYMMETRIC)
        worst = dt.worst_letter(ASYMMETRIC)
        cases = [(2, 4, self.ham), (2, 6, self.ham), (3, 3, asym), (3, 4, asym), (3, 3, worst)]
        for size, n, d in cases:
            types = enumerate_types(size, n)
            for p in types[::2]:
                for q in types[1::2]:
                    if type_class_size(p) * type_class_size(q) > 10 ** 4:
                        continue
                    for D in (0, Fraction(1, 3), Fraction(2, 3)):
                        self.assertEqual(dt.excess_prob_both_random(p, q, D, d), self.brute_force_excess(p, q, D, d))

    def test_split_sums_to_one(self):
        p, q = TypeVector((3, 5)), TypeVector((4, 4))
        le, gt = dt.excess_prob_split(p, q, Fraction(1, 4), self.ham)
        self.assertEqual(le + gt, 1)
        lle, lgt = dt.excess_prob_split(p, q, Fraction(1, 4), self.ham, arith='log')
        self.assertIsInstance(lgt, LogProb)
        self.assertAlmostEqual(float(lgt), float(gt))
        self.assertAlmostEqual(float(lle), float(le))

    def test_log_matches_exact(self):
        p = TypeVector((16, 16))
        for q in (TypeVector((16, 16)), TypeVector((10, 22))):
            for D in (Fraction(1, 8), Fraction(1, 4)):
                exact = dt.excess_prob_both_random(p, q, D, self.ham, arith='exact')
                logp = dt.excess_prob_both_random(p, q, D, self.ham, arith='log')
                self.assertAlmostEqual(logp.log2, LogProb.from_exact(exact).log2, places=8)
                self.assertAlmostEqual(logp.log2_complement, LogProb.from_exact(exact).log2_complement, places=8)

    def test_monotone_in_D(self):
        asym = dt.AdditiveDistortion(ASYMMETRIC)
        p, q = TypeVector((2, 2, 2)), TypeVector((1, 2, 3))
        grid = [Fraction(k, 8) for k in range(0, 20)]
        values = [dt.excess_prob_both_random(p, q, D, asym) for D in grid]
        self.assertEqual(values, sorted(values, reverse=True))
        y = sample_uniform(q, 0)
        values = [dt.excess_prob_fixed_y(p, y, D, asym) for D in grid]
        self.assertEqual(values, sorted(values, reverse=True))

    def test_boundaries(self):
        asym = dt.AdditiveDistortion(ASYMMETRIC)
        for p, q in [(TypeVector((2, 2, 2)), TypeVector((1, 2, 3))), (TypeVector((3, 0, 1)), TypeVector((0, 4, 0)))]:
            low, high = dt.achievable_range(p, q, asym)
            self.assertEqual(dt.excess_prob_both_random(p, q, high / p.n, asym), 0)
            self.assertEqual(dt.excess_prob_both_random(p, q, asym.max_letter, asym), 0)
            if low > 0:
                below = low / p.n - Fraction(1, 1000)
                if below >= 0:
                    self.assertEqual(dt.excess_prob_both_random(p, q, below, asym), 1)

    def test_achievable_range(self):
        low, high = dt.achievable_range(TypeVector((1, 1)), TypeVector((2, 0)), self.ham)
        self.assertEqual((low, high), (1, 1))
        low, high = dt.achievable_range(TypeVector((2, 2)), TypeVector((2, 2)), self.ham)
        self.assertEqual((low, high), (0, 4))


class DualityTests(Tests):
    def test_check_duality_small(self):
        rep = dt.check_duality(TypeVector((1, 1)), TypeVector((1, 1)), 0, dt.hamming(), 3, 0)
        self.assertTrue(rep.equal)
        self.assertEqual(rep.both_random, Fraction(1, 2))
        self.assertEqual(len(rep.lhs_values), 3)

    def test_check_duality_brute_force(self):
        p, q, D = TypeVector((2, 2)), TypeVector((3, 1)), Fraction(1, 4)
        rep = dt.check_duality(p, q, D, dt.hamming(), 4, 1)
        self.assertTrue(rep.equal)
        self.assertEqual(rep.both_random, self.brute_force_excess(p, q, D, dt.hamming()))

    def test_check_duality_constant(self):
        const = dt.AdditiveDistortion([[1, 1], [1, 1]])
        for p, q in [(TypeVector((1, 3)), TypeVector((2, 2))), (TypeVector((4, 0)), TypeVector((1, 3)))]:
            for D, expected in [(0, 1), (Fraction(1, 2), 1), (1, 0), (2, 0)]:
                rep = dt.check_duality(p, q, D, const, 2, 0)
                self.assertTrue(rep.equal)
                self.assertEqual(rep.both_random, expected)

    def test_duality_grid(self):
        grid = [0, Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), 1]
        rng = np.random.default_rng(2)
        matrices = [dt.hamming(), dt.AdditiveDistortion([[0, 2], ['1/3', 0]]),
                    dt.AdditiveDistortion([[0, 1, '1/2'], [1, 0, 2]]),
                    dt.AdditiveDistortion([[0, 1], [1, 0], ['1/2', '1/2']]),
                    dt.hamming(3), dt.AdditiveDistortion(ASYMMETRIC)]
        for d in matrices:
            for n in (2, 4, 6, 8, 12):
                ps = enumerate_types(d.nx, n)
                qs = enumerate_types(d.ny, n)
                if len(ps) * len(qs) > 256:
                    # every pair on the small grids, six types per side on the large ones
                    ps = [ps[i] for i in rng.choice(len(ps), size=6, replace=False)]
                    qs = [qs[i] for i in rng.choice(len(qs), size=6, replace=False)]
                for p in ps:
                    for q in qs:
                        for D in grid:
                            rep = dt.check_duality(p, q, D, d, 2, rng)
                            self.assertTrue(rep.equal, msg='%r %s %s %s' % (d, p, q, D))

    def test_duality_non_additive(self):
        worst = dt.worst_letter(ASYMMETRIC)
        p, q = TypeVector((1, 2, 1)), TypeVector((2, 1, 1))
        for D in (0, 1, 2, 3):
            rep = dt.check_duality(p, q, D, worst, 3, 4)
            self.assertTrue(rep.equal)

    def test_cardinality_lemma(self):
        rng = np.random.default_rng(3)
        asym = dt.AdditiveDistortion(ASYMMETRIC)
        for p, q, d in [(TypeVector((4, 4)), TypeVector((3, 5)), dt.hamming()),
                        (TypeVector((2, 3, 3)), TypeVector((4, 1, 3)), asym)]:
            for D in (0, Fraction(1, 4), Fraction(1, 2)):
                base = dt.ball_cardinality(sample_uniform(q, rng), p, D, d)
                for _ in range(20):
                    self.assertEqual(dt.ball_cardinality(sample_uniform(q, rng), p, D, d), base)

    def test_ball_cardinality(self):
        ham = dt.hamming()
        self.assertEqual(dt.ball_cardinality([0, 1], TypeVector((1, 1)), 0, ham), 1)
        self.assertEqual(dt.ball_cardinality([0, 1], TypeVector((1, 1)), 1, ham), 0)
        self.assertEqual(dt.ball_cardinality([0, 1, 0, 1], TypeVector((2, 2)), 0, ham), 5)


class MonteCarloTests(Tests):
    def test_excess_prob_mc(self):
        ham = dt.hamming()
        p = q = TypeVector((3, 3))
        exact = dt.excess_prob_both_random(p, q, Fraction(1, 6), ham)
        est = dt.excess_prob_mc(p, q, Fraction(1, 6), ham, 20000, 0)
        self.assertEqual(est.trials, 20000)
        self.assert_wilson_covers(est, exact, widths=3)

    def test_excess_prob_mc_trivial(self):
        ham = dt.hamming()
        est = dt.excess_prob_mc(TypeVector((2, 2)), TypeVector((1, 3)), 1, ham, 500, 1)
        self.assertEqual(est.estimate, 0)
        est = dt.excess_prob_mc(TypeVector((2, 2)), TypeVector((1, 3)), 0, ham, 1, 1)
        self.assertIn(est.estimate, (0, 1))
        with self.assertRaises(ValueError):
            dt.excess_prob_mc(TypeVector((2, 2)), TypeVector((1, 3)), 0, ham, 0, 1)

    def test_excess_prob_mc_threads(self):
        ham = dt.hamming()
        p = TypeVector((2, 2))
        a = dt.excess_prob_mc(p, p, 0, ham, 5000, 9, threads=1, block_size=500)
        b = dt.excess_prob_mc(p, p, 0, ham, 5000, 9, threads=4, block_size=500)
        self.assertEqual(a, b)

    def test_excess_prob_mc_calibration(self):
        # p = 1/2 instance, 10 trials per run: each Wilson interval covers with probability ~0.98
        ham = dt.hamming()
        p = q = TypeVector((1, 1))
        exact = dt.excess_prob_both_random(p, q, 0, ham)
        self.assertEqual(exact, Fraction(1, 2))
        covered = 0
        for seed in range(100):
            est = dt.excess_prob_mc(p, q, 0, ham, 10, seed)
            covered += est.low <= float(exact) <= est.high
        self.assertGreaterEqual(covered, 94)


if __name__ == "__main__":
    main()
