'''
distortion and excess probabilities (:mod:`covpack.distortion`)
===============================================================

.. currentmodule:: covpack.distortion

Permutation-invariant distortion functions and the probability that a
pair of sequences, at least one of them uniform on a type class, exceeds
a per-letter threshold D. Three probabilities are computed: with the
reproduction fixed, with the source fixed, and with both random. They
are the same number, and :func:`check_duality` verifies it exactly.

Thresholds are always per letter: a pair (x, y) of length n exceeds D
when d(x, y) > n * D. Ties count as within the threshold.

Classes
^^^^^^^
.. autosummary::
   :toctree: generated

   Distortion
   AdditiveDistortion
   JointTypeDistortion
   DualityReport
   McEstimate

Functions
^^^^^^^^^
.. autosummary::
   :toctree: generated

   hamming
   worst_letter
   excess_prob_fixed_y
   excess_prob_fixed_u
   excess_prob_both_random
   excess_prob_split
   check_duality
   excess_prob_mc
   ball_cardinality
   achievable_range
'''

# ----------------------------------------------------------------------------
# Copyright (c) 2024--,  covpack development team.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file COPYING.txt, distributed with this software.
# ----------------------------------------------------------------------------

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from logging import getLogger

import numpy as np
from scipy.special import gammaln, logsumexp

from .type_lab import (TypeVector, LogProb, EnumerationBudgetError, choose_arith, multinomial,
                       type_class_size, type_class_array, joint_array, sample_uniform,
                       sample_uniform_batch)
from .util import parse_rational, get_limit, block_seeds, wilson_interval, parallel_map
from ._doc import ds


logger = getLogger(__name__)

_LN2 = math.log(2)


def _threshold(n, D, scale=1):
    '''Largest integer total (in units of 1/scale) still within n * D.'''
    D = parse_rational(D)
    if D < 0:
        raise ValueError('distortion threshold must be nonnegative (got %s)' % D)
    return math.floor(n * D * scale)


class Distortion(ABC):
    '''A permutation-invariant distortion between sequences on X and Y.

    Totals are exact rationals. Subclasses implement :meth:`evaluate`;
    the batch test defaults to a loop over it.

    Attributes
    ----------
    nx, ny : int
        the alphabet sizes
    is_additive : bool
        True if the total is the sum of per-letter distortions
    '''
    is_additive = False

    def __init__(self, nx, ny):
        self.nx = int(nx)
        self.ny = int(ny)

    @abstractmethod
    def evaluate(self, x, y):
        '''Total distortion between the index sequences ``x`` and ``y``.

        Returns
        -------
        Fraction
        '''

    @property
    @abstractmethod
    def max_letter(self):
        '''Upper bound on the total distortion divided by n.'''

    def _check_pair(self, x, y):
        x = np.asarray(x, dtype=np.int64)
        y = np.asarray(y, dtype=np.int64)
        if x.shape[-1] != y.shape[-1]:
            raise ValueError('sequence lengths differ (%d != %d)' % (x.shape[-1], y.shape[-1]))
        if x.size and (x.min() < 0 or x.max() >= self.nx):
            raise ValueError('source symbols outside [0, %d)' % self.nx)
        if y.size and (y.min() < 0 or y.max() >= self.ny):
            raise ValueError('reproduction symbols outside [0, %d)' % self.ny)
        return x, y

    def exceeds(self, x, y, D):
        '''True if d(x, y) > n * D.'''
        x, y = self._check_pair(x, y)
        return self.evaluate(x, y) > len(x) * parse_rational(D)

    def exceeds_batch(self, xs, ys, D):
        '''Vectorized :meth:`exceeds` over the leading axes of ``xs`` and ``ys`` (broadcast).

        Returns
        -------
        numpy.ndarray of bool
        '''
        xs, ys = self._check_pair(xs, ys)
        xs, ys = np.broadcast_arrays(xs, ys)
        lead = xs.shape[:-1]
        flat_x = xs.reshape(-1, xs.shape[-1])
        flat_y = ys.reshape(-1, ys.shape[-1])
        res = np.array([self.exceeds(a, b, D) for a, b in zip(flat_x, flat_y)], dtype=bool)
        return res.reshape(lead)


class AdditiveDistortion(Distortion):
    '''Per-letter additive distortion given by a rational matrix.

    Parameters
    ----------
    matrix : 2-d array-like of rationals
        ``matrix[x][y]`` is d(x, y) >= 0; entries may be "num/den" strings
    '''
    is_additive = True

    def __init__(self, matrix):
        rows = [[parse_rational(v) for v in row] for row in matrix]
        if len(rows) == 0 or len(rows[0]) == 0:
            raise ValueError('distortion matrix is empty')
        if len(set(len(r) for r in rows)) != 1:
            raise ValueError('distortion matrix rows have different lengths')
        if any(v < 0 for r in rows for v in r):
            raise ValueError('distortion matrix has negative entries')
        super().__init__(len(rows), len(rows[0]))
        self.matrix = tuple(tuple(r) for r in rows)
        # integer copy of the matrix in units of 1/scale
        self.scale = reduce(lambda a, b: a * b // math.gcd(a, b), (v.denominator for r in rows for v in r), 1)
        self.int_matrix = np.array([[int(v * self.scale) for v in r] for r in rows], dtype=np.int64)

    def __repr__(self):
        return 'AdditiveDistortion(%s)' % [[str(v) for v in r] for r in self.matrix]

    @property
    def max_letter(self):
        return max(v for r in self.matrix for v in r)

    def evaluate(self, x, y):
        x, y = self._check_pair(x, y)
        return Fraction(int(self.int_matrix[x, y].sum()), self.scale)

    def exceeds_batch(self, xs, ys, D):
        xs, ys = self._check_pair(xs, ys)
        totals = self.int_matrix[xs, ys].sum(axis=-1)
        return totals > _threshold(xs.shape[-1], D, self.scale)

    def joint_totals(self, joints):
        '''Total distortion of a stack of joint types, in units of 1/scale.'''
        return (np.asarray(joints, dtype=np.int64) * self.int_matrix).sum(axis=(-2, -1))

    def joint_exceeds(self, joints, D):
        '''For a (K, nx, ny) stack of joint types, which exceed n * D.'''
        joints = np.asarray(joints, dtype=np.int64)
        if len(joints) == 0:
            return np.zeros(0, dtype=bool)
        n = int(joints[0].sum())
        return self.joint_totals(joints) > _threshold(n, D, self.scale)


class JointTypeDistortion(Distortion):
    '''A non-additive distortion defined through the joint type.

    Any function of the joint type is permutation invariant.

    Parameters
    ----------
    nx, ny : int
        alphabet sizes
    func : callable
        maps a (nx, ny) joint-type count array to the total distortion (a rational)
    max_letter : rational
        bound on the total divided by n
    name : str, optional
    '''
    def __init__(self, nx, ny, func, max_letter, name='joint-type'):
        super().__init__(nx, ny)
        self.func = func
        self._max_letter = parse_rational(max_letter)
        self.name = name

    def __repr__(self):
        return 'JointTypeDistortion(%s)' % self.name

    @property
    def max_letter(self):
        return self._max_letter

    def evaluate(self, x, y):
        x, y = self._check_pair(x, y)
        joint = np.bincount(x * self.ny + y, minlength=self.nx * self.ny).reshape(self.nx, self.ny)
        return parse_rational(self.func(joint))


def hamming(nx=2, ny=None):
    '''The Hamming distortion: 0 when the indices agree, 1 otherwise.'''
    if ny is None:
        ny = nx
    return AdditiveDistortion([[0 if a == b else 1 for b in range(ny)] for a in range(nx)])


def worst_letter(matrix):
    '''n times the largest per-letter distortion among the pairs present.

    A bottleneck distortion: not additive, but permutation invariant.
    '''
    base = AdditiveDistortion(matrix)

    def func(joint):
        present = np.asarray(joint) > 0
        worst = max(base.matrix[a][b] for a, b in zip(*np.nonzero(present)))
        return int(np.asarray(joint).sum()) * worst
    return JointTypeDistortion(base.nx, base.ny, func, base.max_letter, name='worst-letter')


def _check_types(p, q, d):
    if p.n != q.n:
        raise ValueError('types have different block lengths (%d != %d)' % (p.n, q.n))
    if p.size != d.nx or q.size != d.ny:
        raise ValueError('types of sizes %d, %d do not fit a %dx%d distortion' % (p.size, q.size, d.nx, d.ny))


def _ln_sum(values):
    if len(values) == 0:
        return -math.inf
    return float(logsumexp(values))


def _joint_split(p, q, D, d, arith, given=None, budget=None):
    '''(Pr <= D, Pr > D) by summing over the joint types with margins (p, q).

    ``given`` selects which side is held fixed: None for both random,
    'y' for a fixed reproduction of type q, 'u' for a fixed source word of type p.
    '''
    if not d.is_additive:
        raise ValueError('the joint-type reduction needs an additive distortion (got %r)' % d)
    joints = joint_array(p, q, budget)
    exceed = d.joint_exceeds(joints, D)
    logger.debug('joint-type sum over %d joint types (%d exceeding), given=%s, arith=%s'
                 % (len(joints), exceed.sum(), given, arith))
    if arith == 'exact':
        if given is None:
            weights = [multinomial(m.ravel()) for m in joints]
            total = type_class_size(p) * type_class_size(q)
        elif given == 'y':
            weights = [reduce(lambda a, b: a * b, (multinomial(col) for col in m.T), 1) for m in joints]
            total = type_class_size(p)
        elif given == 'u':
            weights = [reduce(lambda a, b: a * b, (multinomial(row) for row in m), 1) for m in joints]
            total = type_class_size(q)
        else:
            raise ValueError('unknown side %r' % given)
        gt = sum(w for w, e in zip(weights, exceed) if e)
        return Fraction(total - gt, total), Fraction(gt, total)
    # the per-side constants cancel after normalization
    ln_w = -gammaln(joints + 1).sum(axis=(1, 2))
    return _log_split(_ln_sum(ln_w[~exceed]), _ln_sum(ln_w[exceed]))


def _log_split(ln_le, ln_gt):
    res = LogProb.from_split(ln_le / _LN2, ln_gt / _LN2)
    return res, res.complement()


def _as_arith(split, arith):
    if arith == 'log' and not isinstance(split[0], LogProb):
        return LogProb.from_exact(split[0]), LogProb.from_exact(split[1])
    return split


def _fixed_split(t, seq, D, d, arith, given, limit, budget):
    # t is the type of the random side; seq the fixed sequence
    seq = np.asarray(seq, dtype=np.int64)
    if t.n != len(seq):
        raise ValueError('type block length %d does not match sequence length %d' % (t.n, len(seq)))
    if given == 'y':
        p, q = t, TypeVector.from_sequence(seq, d.ny)
    else:
        p, q = TypeVector.from_sequence(seq, d.nx), t
    _check_types(p, q, d)
    limit = get_limit('class_enumeration_limit', limit)
    if type_class_size(t) <= limit:
        members = type_class_array(t, limit)
        if given == 'y':
            gt = int(d.exceeds_batch(members, seq[np.newaxis, :], D).sum())
        else:
            gt = int(d.exceeds_batch(seq[np.newaxis, :], members, D).sum())
        total = len(members)
        return _as_arith((Fraction(total - gt, total), Fraction(gt, total)), arith)
    if not d.is_additive:
        raise EnumerationBudgetError('enumeration too large: type class %s exceeds %d members and %r is not additive'
                                     % (t, limit, d))
    return _joint_split(p, q, D, d, choose_arith(arith, t.n), given=given, budget=budget)


@ds.get_sections(base='excess_prob_fixed_y')
def excess_prob_fixed_y(p, y_seq, D, d, arith='exact', limit=None, budget=None):
    '''Pr(d(U, y) > n * D) for U uniform on the type class of ``p``.

    The type class is enumerated when it has at most ``limit`` members;
    otherwise additive distortions go through the joint types with the
    margins (p, type(y)).

    Parameters
    ----------
    p : TypeVector
        the type of the random source word
    y_seq : array-like of int
        the fixed reproduction word (symbol indices)
    D : rational
        per-letter threshold, D >= 0
    d : Distortion
    arith : {'exact', 'log', 'auto'}, optional
        arithmetic policy; 'exact' returns a Fraction, 'log' a LogProb
    limit : int or None, optional
        largest type class enumerated; None reads ``[limits] class_enumeration_limit``
    budget : int or None, optional
        joint-type enumeration budget; None reads ``[limits] enumeration_budget``

    Returns
    -------
    Fraction or LogProb

    Raises
    ------
    EnumerationBudgetError
        if the class is too large and ``d`` is not additive, or the joint
        types exceed the budget
    '''
    arith = choose_arith(arith, p.n)
    return _fixed_split(p, y_seq, D, d, arith, 'y', limit, budget)[1]


ds.keep_params('excess_prob_fixed_y.parameters', 'arith', 'limit', 'budget')


@ds.with_indent(4)
def excess_prob_fixed_u(u_seq, q, D, d, arith='exact', limit=None, budget=None):
    '''Pr(d(u, V) > n * D) for V uniform on the type class of ``q``.

    The mirror image of :func:`excess_prob_fixed_y`.

    Parameters
    ----------
    u_seq : array-like of int
        the fixed source word
    q : TypeVector
        the type of the random reproduction word
    D : rational
    d : Distortion
    %(excess_prob_fixed_y.parameters.arith|limit|budget)s

    Returns
    -------
    Fraction or LogProb
    '''
    arith = choose_arith(arith, q.n)
    return _fixed_split(q, u_seq, D, d, arith, 'u', limit, budget)[1]


def _pair_split(p, q, D, d, budget):
    # exhaustive double enumeration, for non-additive distortions
    budget = get_limit('enumeration_budget', budget)
    size = type_class_size(p) * type_class_size(q)
    if size > budget:
        raise EnumerationBudgetError('enumeration too large: %d sequence pairs (budget %d)' % (size, budget))
    us = type_class_array(p, budget)
    vs = type_class_array(q, budget)
    chunk = max(1, 100000 // len(vs))
    gt = 0
    for start in range(0, len(us), chunk):
        block = us[start:start + chunk]
        gt += int(d.exceeds_batch(block[:, np.newaxis, :], vs[np.newaxis, :, :], D).sum())
    return Fraction(size - gt, size), Fraction(gt, size)


def excess_prob_split(p, q, D, d, arith='exact', budget=None):
    '''Both Pr(d(U, V) <= n * D) and Pr(d(U, V) > n * D) with U, V independent.

    Parameters
    ----------
    p, q : TypeVector
        types of U (on X) and V (on Y)
    D : rational
    d : Distortion
    arith : {'exact', 'log', 'auto'}, optional
    budget : int or None, optional

    Returns
    -------
    tuple of (Fraction, Fraction) or (LogProb, LogProb)
        the within and the exceeding probabilities, summing to one
    '''
    _check_types(p, q, d)
    arith = choose_arith(arith, p.n)
    if d.is_additive:
        return _joint_split(p, q, D, d, arith, budget=budget)
    return _as_arith(_pair_split(p, q, D, d, budget), arith)


def excess_prob_both_random(p, q, D, d, arith='exact', budget=None):
    '''Pr(d(U, V) > n * D) with U uniform on T_p and V independent uniform on T_q.

    For additive ``d`` the sum runs over the joint types M with margins
    (p, q), each weighted by the number of pairs having that joint type;
    otherwise every pair is enumerated.

    Examples
    --------
    >>> from covpack.type_lab import TypeVector
    >>> excess_prob_both_random(TypeVector((2, 2)), TypeVector((2, 2)), 0, hamming())
    Fraction(5, 6)
    '''
    return excess_prob_split(p, q, D, d, arith, budget)[1]


@dataclass(frozen=True)
class DualityReport:
    '''The three excess probabilities of one instance.

    ``lhs`` and ``rhs`` are the values at the first probe; every probe is
    kept in ``lhs_values`` / ``rhs_values``.
    '''
    n: int
    p: tuple
    q: tuple
    D: Fraction
    lhs: Fraction
    rhs: Fraction
    both_random: Fraction
    equal: bool
    lhs_values: tuple = ()
    rhs_values: tuple = ()


def check_duality(p, q, D, d, probe_count=4, random_seed=None, limit=None, budget=None):
    '''Compare the fixed-y, fixed-u and both-random excess probabilities.

    Parameters
    ----------
    p : TypeVector
        the source type
    q : TypeVector
        the reproduction type
    D : rational
    d : Distortion
    probe_count : int, optional
        number of random y (of type q) and of random u (of type p) probed
    random_seed : int, np.random.Generator instance or None, optional, default=None
        set the random number generator seed for choosing the probes
        If int, random_seed is the seed used by the random number generator;
        If Generator instance, random_seed is set to the random number generator;
        If None, then fresh, unpredictable entropy will be pulled from the OS
    limit, budget : int or None, optional
        enumeration limits, see :func:`excess_prob_fixed_y`

    Returns
    -------
    DualityReport
        with ``equal`` True only if every computed value is the same rational
    '''
    if probe_count < 1:
        raise ValueError('probe_count must be at least 1 (got %d)' % probe_count)
    _check_types(p, q, d)
    D = parse_rational(D)
    rng = np.random.default_rng(random_seed)
    lhs = tuple(excess_prob_fixed_y(p, sample_uniform(q, rng), D, d, 'exact', limit, budget)
                for _ in range(probe_count))
    rhs = tuple(excess_prob_fixed_u(sample_uniform(p, rng), q, D, d, 'exact', limit, budget)
                for _ in range(probe_count))
    both = excess_prob_both_random(p, q, D, d, 'exact', budget)
    equal = len(set(lhs + rhs + (both,))) == 1
    if not equal:
        logger.warning('duality mismatch at p=%s q=%s D=%s: fixed-y %s, fixed-u %s, both random %s'
                       % (p, q, D, lhs, rhs, both))
    return DualityReport(n=p.n, p=p.counts, q=q.counts, D=D, lhs=lhs[0], rhs=rhs[0], both_random=both,
                         equal=equal, lhs_values=lhs, rhs_values=rhs)


@dataclass(frozen=True)
class McEstimate:
    '''A Monte Carlo frequency with its 95% Wilson interval.'''
    estimate: float
    count: int
    trials: int
    low: float
    high: float

    @property
    def half_width(self):
        return (self.high - self.low) / 2

    @classmethod
    def from_count(cls, count, trials):
        low, high = wilson_interval(count, trials)
        return cls(estimate=count / trials, count=int(count), trials=int(trials), low=low, high=high)


def excess_prob_mc(p, q, D, d, trials, random_seed=None, threads=1, block_size=None):
    '''Monte Carlo estimate of :func:`excess_prob_both_random`.

    Parameters
    ----------
    p, q : TypeVector
    D : rational
    d : Distortion
    trials : int
        number of independent (U, V) draws, >= 1
    random_seed : int, np.random.Generator instance or None, optional, default=None
        set the random number generator seed for the trials
        If int, random_seed is the seed used by the random number generator;
        If Generator instance, random_seed is set to the random number generator;
        If None, then fresh, unpredictable entropy will be pulled from the OS
    threads : int, optional
        worker threads; the result does not depend on it
    block_size : int or None, optional
        trials per random substream; None reads ``[simulation] block_size``

    Returns
    -------
    McEstimate
    '''
    if trials < 1:
        raise ValueError('trials must be at least 1 (got %d)' % trials)
    _check_types(p, q, d)

    def run(block):
        size, rng = block
        us = sample_uniform_batch(p, size, rng)
        vs = sample_uniform_batch(q, size, rng)
        return int(d.exceeds_batch(us, vs, D).sum())

    count = sum(parallel_map(run, block_seeds(random_seed, trials, block_size), threads))
    return McEstimate.from_count(count, trials)


def ball_cardinality(y_seq, p, D, d, limit=None, budget=None):
    '''Number of u of type ``p`` with d(u, y) > n * D.

    Parameters
    ----------
    y_seq : array-like of int
    p : TypeVector
    D : rational
    d : Distortion
    limit, budget : int or None, optional
        see :func:`excess_prob_fixed_y`

    Returns
    -------
    int
    '''
    frac = _fixed_split(p, y_seq, D, d, 'exact', 'y', limit, budget)[1]
    return int(frac * type_class_size(p))


def achievable_range(p, q, d, budget=None):
    '''Least and largest total distortion over pairs with types (p, q).

    Returns
    -------
    tuple of (Fraction, Fraction)
    '''
    _check_types(p, q, d)
    if d.is_additive:
        totals = d.joint_totals(joint_array(p, q, budget))
        return Fraction(int(totals.min()), d.scale), Fraction(int(totals.max()), d.scale)
    budget = get_limit('enumeration_budget', budget)
    if type_class_size(p) * type_class_size(q) > budget:
        raise EnumerationBudgetError('enumeration too large for achievable_range of %r' % d)
    us = type_class_array(p, budget)
    vs = type_class_array(q, budget)
    totals = [d.evaluate(u, v) for u in us for v in vs]
    return min(totals), max(totals)
