# ----------------------------------------------------------------------------
# Copyright (c) 2024--,  covpack development team.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file COPYING.txt, distributed with this software.
# ----------------------------------------------------------------------------

from unittest import main
from fractions import Fraction
from itertools import product

import numpy as np
import numpy.testing as npt
from scipy.stats import chisquare

from covpack import packing as pk
from covpack.covering import best_q, rate_exponent
from covpack.distortion import hamming, worst_letter, AdditiveDistortion
from covpack.type_lab import TypeVector, enumerate_types, EnumerationBudgetError
from covpack._testing import Tests


class ChannelTests(Tests):
    def test_identity_channel(self):
        ch = pk.identity_channel(3)
        x = np.array([0, 2, 1, 1, 0])
        npt.assert_array_equal(ch.transmit(x, 0), x)
        xs = np.random.default_rng(0).integers(3, size=(50, 8))
        npt.assert_array_equal(ch.transmit_batch(xs, 1), xs)

    def test_constant_column(self):
        ch = pk.dmc_channel([[0, 1], [0, 1]])
        xs = np.random.default_rng(0).integers(2, size=(20, 6))
        npt.assert_array_equal(ch.transmit_batch(xs, 2), np.ones((20, 6)))

    def test_dmc_validation(self):
        with self.assertRaises(ValueError):
            pk.dmc_channel([[0.5, 0.4], [0, 1]])
        with self.assertRaises(ValueError):
            pk.dmc_channel([[1.5, -0.5], [0, 1]])
        with self.assertRaises(ValueError):
            pk.bsc_channel('3/2')

    def test_bsc_flip_rate(self):
        ch = pk.bsc_channel('1/10')
        xs = np.zeros((2000, 50), dtype=int)
        ys = ch.transmit_batch(xs, 3)
        self.assertAlmostEqual(ys.mean(), 0.1, delta=0.005)
        self.assertEqual(ch.params, {'crossover': '1/10'})

    def test_transmit_is_stateless(self):
        ch = pk.bsc_channel('1/4')
        x = np.zeros(30, dtype=int)
        npt.assert_array_equal(ch.transmit(x, 7), ch.transmit(x, 7))

    def test_ball_channel_radius(self):
        ham = hamming()
        ch = pk.ball_channel(ham, '1/4')
        rng = np.random.default_rng(4)
        for x in product((0, 1), repeat=4):
            ball = {w for w in product((0, 1), repeat=4) if ham.evaluate(x, w) <= 1}
            seen = {tuple(ch.transmit(np.array(x), rng)) for _ in range(200)}
            self.assertEqual(seen, ball)

    def test_ball_channel_uniform(self):
        ham = hamming()
        ch = pk.ball_channel(ham, '1/4')
        x = np.array([0, 1, 1, 0])
        ys = ch.transmit_batch(np.tile(x, (5000, 1)), 5)
        words = {w: i for i, w in enumerate(sorted({tuple(y) for y in ys}))}
        self.assertEqual(len(words), 5)
        freq = np.bincount([words[tuple(y)] for y in ys], minlength=5)
        self.assertGreater(chisquare(freq).pvalue, 0.001)

    def test_ball_channel_extremes(self):
        ham = hamming()
        xs = np.random.default_rng(6).integers(2, size=(30, 5))
        npt.assert_array_equal(pk.ball_channel(ham, 0).transmit_batch(xs, 7), xs)
        # radius at the largest distortion: uniform over all 2^4 words
        ch = pk.ball_channel(ham, 1)
        ys = ch.transmit_batch(np.zeros((8000, 4), dtype=int), 8)
        freq = np.bincount(ys @ np.array([8, 4, 2, 1]), minlength=16)
        self.assertGreater(chisquare(freq).pvalue, 0.001)

    def test_ball_channel_non_additive(self):
        worst = worst_letter([[0, 1], [1, 0]])
        ch = pk.ball_channel(worst, '1/2')
        # any flip gives worst-letter distortion n, above n/2
        xs = np.random.default_rng(9).integers(2, size=(20, 4))
        npt.assert_array_equal(ch.transmit_batch(xs, 1), xs)
        with self.assertRaises(EnumerationBudgetError):
            pk.ball_channel(worst, 1, budget=10).transmit(np.zeros(8, dtype=int), 0)

    def test_ball_channel_empty(self):
        const = AdditiveDistortion([[1, 1], [1, 1]])
        with self.assertRaisesRegex(ValueError, 'empty distortion ball'):
            pk.ball_channel(const, 0).transmit(np.array([0, 1]), 0)

    def test_repetition_wrapper(self):
        w = pk.repetition_wrapper(3)
        npt.assert_array_equal(w.encode([0, 1]), [0, 0, 0, 1, 1, 1])
        npt.assert_array_equal(w.decode(np.array([0, 1, 1, 1, 0, 0]), 2), [1, 0])
        # ties go to the lowest index
        npt.assert_array_equal(pk.repetition_wrapper(2).decode(np.array([1, 0, 0, 1]), 2), [0, 0])
        with self.assertRaises(ValueError):
            pk.repetition_wrapper(0)

    def test_composed_channel(self):
        xs = np.random.default_rng(10).integers(2, size=(40, 6))
        ch = pk.ComposedChannel(pk.repetition_wrapper(5), pk.identity_channel(2))
        npt.assert_array_equal(ch.transmit_batch(xs, 1), xs)
        self.assertEqual(ch.name, 'repetition*identity')
        # repetition lowers the effective crossover of a BSC
        noisy = pk.ComposedChannel(pk.repetition_wrapper(5), pk.bsc_channel('1/10'))
        ys = noisy.transmit_batch(np.zeros((2000, 20), dtype=int), 2)
        self.assertEqual(ys.shape, (2000, 20))
        self.assertLess(ys.mean(), 0.02)


class OmegaTests(Tests):
    def setUp(self):
        super().setUp()
        self.ham = hamming()

    def test_ball_omega(self):
        ch = pk.ball_channel(self.ham, '1/4')
        prof = pk.estimate_omega(ch, TypeVector((4, 4)), '1/4', self.ham, 500, 0)
        self.assertEqual(prof.estimate, 0)
        self.assertTrue(prof.guaranteed)
        self.assertEqual(prof.upper, 0)
        # a smaller D is not covered by the guarantee
        prof = pk.estimate_omega(ch, TypeVector((4, 4)), '1/8', self.ham, 500, 0)
        self.assertFalse(prof.guaranteed)
        self.assertGreater(prof.estimate, 0)

    def test_identity_omega(self):
        prof = pk.estimate_omega(pk.identity_channel(), TypeVector((3, 3)), 0, self.ham, 200, 0)
        self.assertEqual(prof.estimate, 0)
        self.assertEqual(prof.upper, 0)
        self.assertEqual(prof.trials, 200)

    def test_bsc_omega_trend(self):
        ch = pk.bsc_channel('1/20')
        D = Fraction(1, 5)
        values = [pk.estimate_omega(ch, TypeVector((n // 2, n // 2)), D, self.ham, 100000, n).estimate
                  for n in (32, 64, 128)]
        self.assertGreater(values[0], 0)
        self.assertGreaterEqual(values[0], values[1])
        self.assertGreaterEqual(values[1], values[2])
        prof = pk.estimate_omega(ch, TypeVector((128, 128)), D, self.ham, 10000, 1)
        self.assertLess(prof.estimate, 0.01)
        self.assertFalse(prof.guaranteed)

    def test_omega_threads(self):
        ch = pk.bsc_channel('1/5')
        p = TypeVector((5, 5))
        a = pk.estimate_omega(ch, p, '1/5', self.ham, 4000, 3, threads=1, block_size=300)
        b = pk.estimate_omega(ch, p, '1/5', self.ham, 4000, 3, threads=4, block_size=300)
        self.assertEqual(a, b)


class DecodeTests(Tests):
    def test_decode(self):
        ham = hamming()
        codebook = [[0, 1], [1, 0]]
        self.assertEqual(pk.decode([0, 1], codebook, 0, ham), ('unique', 0))
        self.assertEqual(pk.decode([1, 0], codebook, 0, ham), ('unique', 1))
        self.assertEqual(pk.decode([0, 0], codebook, 0, ham), ('none', None))
        self.assertEqual(pk.decode([0, 0], codebook, Fraction(1, 2), ham), ('ambiguous', None))
        # repeated codewords are ambiguous
        self.assertEqual(pk.decode([0, 1], [[0, 1], [0, 1]], 0, ham), ('ambiguous', None))


class PackingTests(Tests):
    def setUp(self):
        super().setUp()
        self.ham = hamming()

    def test_single_codeword_ball(self):
        ch = pk.ball_channel(self.ham, '1/4')
        p = TypeVector((4, 4))
        res = pk.simulate_packing(ch, p, '1/4', self.ham, 0, 500, 0)
        self.assertEqual(res.codebook_size, 1)
        self.assertEqual(res.counts['correct'], 500)
        self.assertEqual(res.correct_rate, 1)
        A = best_q(p, '1/4', self.ham)[1]
        omega = pk.estimate_omega(ch, p, '1/4', self.ham, 200, 1)
        check = pk.bound_check(res, A, omega)
        self.assertTrue(check.passed)
        self.assertEqual(check.bound, 1)
        self.assertEqual(check.margin, 0)

    def test_two_codewords_identity(self):
        ch = pk.identity_channel()
        p = TypeVector((1, 1))
        res = pk.simulate_packing(ch, p, 0, self.ham, '1/2', 10000, 2)
        self.assertEqual(res.codebook_size, 2)
        self.assertEqual(res.mode, 'literal')
        self.assertEqual(res.trials, 10000)
        self.assert_wilson_covers(res.correct, 0.5, widths=3)
        # the only failure is the other codeword equal to the sent one
        self.assertEqual(res.counts['correct'] + res.counts['ambiguous'], 10000)
        omega = pk.estimate_omega(ch, p, 0, self.ham, 1000, 3)
        check = pk.bound_check(res, Fraction(1, 2), omega)
        self.assertEqual(check.bound, 0.5)
        self.assertTrue(check.passed)

    def test_bound_in_result(self):
        ch = pk.identity_channel()
        p = TypeVector((1, 1))
        omega = pk.estimate_omega(ch, p, 0, self.ham, 100, 3)
        res = pk.simulate_packing(ch, p, 0, self.ham, '1/2', 100, 2, A=Fraction(1, 2), omega=omega)
        self.assertEqual(res.bound, 0.5)

    def test_bound_check_failure(self):
        res = pk.PackingResult(n=2, rate=Fraction(1, 2), codebook_size=2,
                               counts={'correct': 0, 'wrong_unique': 0, 'none': 100, 'ambiguous': 0},
                               mode='literal')
        omega = pk.estimate_omega(pk.identity_channel(), TypeVector((1, 1)), 0, self.ham, 100, 3)
        check = pk.bound_check(res, Fraction(1, 2), omega)
        self.assertFalse(check.passed)
        self.assertLess(check.margin, 0)

    def test_literal_and_collapsed_agree(self):
        ch = pk.bsc_channel('1/20')
        p = TypeVector((4, 4))
        D = Fraction(1, 4)
        literal = pk.simulate_packing(ch, p, D, self.ham, '1/4', 4000, 4)
        collapsed = pk.simulate_packing(ch, p, D, self.ham, '1/4', 4000, 5, literal_limit=1)
        self.assertEqual(literal.mode, 'literal')
        self.assertEqual(collapsed.mode, 'collapsed')
        slack = 3 * (literal.correct.half_width + collapsed.correct.half_width)
        self.assertLessEqual(abs(literal.correct_rate - collapsed.correct_rate), slack)
        for res in (literal, collapsed):
            self.assertEqual(set(res.counts), set(pk.OUTCOMES))
            self.assertEqual(res.trials, 4000)

    def test_packing_grid_bound(self):
        D = Fraction(1, 4)
        for ch in (pk.ball_channel(self.ham, D), pk.bsc_channel('1/20')):
            for n in (2, 4, 8):
                p = TypeVector((n // 2, n // 2))
                A = best_q(p, D, self.ham)[1]
                omega = pk.estimate_omega(ch, p, D, self.ham, 2000, n)
                for rate in ('0', '1/10', '1/4'):
                    res = pk.simulate_packing(ch, p, D, self.ham, rate, 2000, 10 * n)
                    self.assertTrue(pk.bound_check(res, A, omega).passed, msg='%r n=%d R=%s' % (ch, n, rate))

    def test_bsc_long_block(self):
        ch = pk.bsc_channel('3/100')
        p = TypeVector((64, 64))
        D = Fraction(11, 100)
        res = pk.simulate_packing(ch, p, D, self.ham, '1/4', 1000, 6)
        self.assertEqual(res.mode, 'collapsed')
        self.assertEqual(res.codebook_size, 2 ** 32)
        self.assertGreaterEqual(res.correct_rate, 0.9)
        A = best_q(p, D, self.ham)[1]
        omega = pk.estimate_omega(ch, p, D, self.ham, 1000, 7)
        self.assertTrue(pk.bound_check(res, A, omega).passed)

    def test_simulate_threads(self):
        ch = pk.bsc_channel('1/10')
        p = TypeVector((3, 3))
        a = pk.simulate_packing(ch, p, '1/6', self.ham, '1/3', 3000, 8, threads=1, block_size=400)
        b = pk.simulate_packing(ch, p, '1/6', self.ham, '1/3', 3000, 8, threads=3, block_size=400)
        self.assertEqual(a, b)


class RateTests(Tests):
    def setUp(self):
        super().setUp()
        self.ham = hamming()

    def test_worst_case_excess_matches_best_q(self):
        asym = AdditiveDistortion([[0, 1, 2], [1, 0, '1/2'], [3, 1, 0]])
        for d, size, lengths in [(self.ham, 2, range(1, 13)), (asym, 3, (3, 6, 9))]:
            for n in lengths:
                for p in enumerate_types(size, n)[::size + 1]:
                    for D in (0, Fraction(1, 4), Fraction(1, 2)):
                        self.assertEqual(pk.worst_case_excess(p, D, d, arith='exact'),
                                         best_q(p, D, d, arith='exact'))

    def test_achievable_rate_trivial(self):
        self.assertEqual(pk.achievable_rate_estimate(TypeVector((1, 1)), 1, self.ham), 0)
        self.assertEqual(pk.achievable_rate_estimate(TypeVector((1, 1)), 0, self.ham, n=2), 0)
        with self.assertRaises(ValueError):
            pk.achievable_rate_estimate(TypeVector((1, 1)), 0, self.ham, n=4)

    def test_achievable_rate_small(self):
        # (69/70)^(M-1) < 0.99 for every M >= 2
        p = TypeVector((4, 4))
        self.assertEqual(pk.achievable_rate_estimate(p, 0, self.ham), 0)
        p = TypeVector((16, 16))
        rate = pk.achievable_rate_estimate(p, 0, self.ham)
        self.assertGreater(rate, 0)
        self.assertLessEqual(rate, rate_exponent(p, 0, self.ham))

    def test_achievable_rate_tracks_exponent(self):
        p = TypeVector((256, 256))
        D = Fraction(11, 100)
        A = best_q(p, D, self.ham)[1]
        rate = pk.achievable_rate_estimate(p, D, self.ham, A=A)
        self.assertLessEqual(abs(rate - rate_exponent(p, D, self.ham)), 0.05)


if __name__ == "__main__":
    main()
