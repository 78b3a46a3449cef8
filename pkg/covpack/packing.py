'''
packing over black-box channels (:mod:`covpack.packing`)
========================================================

.. currentmodule:: covpack.packing

The channel-coding side. A channel communicates the uniform source
within distortion D when the probability omega that its output is
farther than D from its input vanishes. Codebooks of 2^floor(n*R)
independent uniform words of type p are sent through such a channel and
decoded by unique joint typicality: the decoder names the only codeword
within D of the received word, and fails when there is none or more
than one. The correct-decoding probability is at least
-omega + A^(M-1).

Classes
^^^^^^^
.. autosummary::
   :toctree: generated

   ChannelModel
   DMCChannel
   BallChannel
   ComposedChannel
   Wrapper
   DistortionProfile
   PackingResult
   BoundCheck

Functions
^^^^^^^^^
.. autosummary::
   :toctree: generated

   dmc_channel
   bsc_channel
   identity_channel
   ball_channel
   identity_wrapper
   repetition_wrapper
   estimate_omega
   decode
   simulate_packing
   bound_check
   worst_case_excess
   achievable_rate_estimate
'''

# ----------------------------------------------------------------------------
# Copyright (c) 2024--,  covpack development team.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file COPYING.txt, distributed with this software.
# ----------------------------------------------------------------------------

import math
import itertools
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from logging import getLogger

import numpy as np
from scipy.special import gammaln

from .type_lab import (LogProb, EnumerationBudgetError, enumerate_types, prob_power, sample_uniform_batch,
                       iter_compositions)
from .distortion import McEstimate, excess_prob_fixed_y
from .covering import codebook_size, best_q
from .util import parse_rational, get_limit, block_seeds, parallel_map


logger = getLogger(__name__)

OUTCOMES = ('correct', 'wrong_unique', 'none', 'ambiguous')


class ChannelModel(ABC):
    '''A black-box channel from sequences on X to sequences on Y.

    Implementations hold no state between calls; all randomness comes
    from the generator passed in.

    Attributes
    ----------
    name : str
    params : dict
        parameters for reports
    nx, ny : int
        input and output alphabet sizes
    '''
    def __init__(self, name, nx, ny, params=None):
        self.name = name
        self.nx = int(nx)
        self.ny = int(ny)
        self.params = dict(params or {})

    def __repr__(self):
        return '%s(%s)' % (self.name, ', '.join('%s=%s' % (k, v) for k, v in self.params.items()))

    @abstractmethod
    def transmit(self, x, random_seed=None):
        '''Send the index sequence ``x``; returns the output sequence of the same length.'''

    def transmit_batch(self, xs, random_seed=None):
        '''Send every row of ``xs``.'''
        rng = np.random.default_rng(random_seed)
        xs = np.asarray(xs, dtype=np.int64)
        return np.array([self.transmit(x, rng) for x in xs], dtype=np.int64).reshape(xs.shape[0], -1)

    def guarantees_within(self, D, d):
        '''True if every output is within ``D`` of its input under ``d`` by construction.'''
        return False


class DMCChannel(ChannelModel):
    '''Memoryless channel applying a stochastic matrix letter by letter.

    Parameters
    ----------
    W : 2-d array-like of float
        ``W[x][y]`` is the probability of output y given input x
    name : str, optional
    '''
    def __init__(self, W, name='dmc'):
        W = np.asarray(W, dtype=float)
        if W.ndim != 2 or W.size == 0:
            raise ValueError('channel matrix must be a nonempty 2-d array')
        if (W < 0).any():
            raise ValueError('channel matrix has negative entries')
        if not np.allclose(W.sum(axis=1), 1, atol=1e-9):
            raise ValueError('channel matrix rows must sum to 1 (got %s)' % W.sum(axis=1))
        super().__init__(name, W.shape[0], W.shape[1], {'W': W.tolist()})
        self.W = W
        self._cum = np.cumsum(W, axis=1)

    def transmit(self, x, random_seed=None):
        return self.transmit_batch(np.asarray(x)[np.newaxis, :], random_seed)[0]

    def transmit_batch(self, xs, random_seed=None):
        rng = np.random.default_rng(random_seed)
        xs = np.asarray(xs, dtype=np.int64)
        r = rng.random(xs.shape)
        ys = (r[..., np.newaxis] >= self._cum[xs]).sum(axis=-1)
        return np.minimum(ys, self.ny - 1)

    def guarantees_within(self, D, d):
        # noiseless and d(x, x) = 0 for every letter
        if self.nx != self.ny or not np.array_equal(self.W, np.eye(self.nx)) or not d.is_additive:
            return False
        return parse_rational(D) >= 0 and all(d.matrix[a][a] == 0 for a in range(self.nx))


def dmc_channel(W):
    '''A :class:`DMCChannel` for the stochastic matrix ``W``.'''
    return DMCChannel(W)


def bsc_channel(crossover):
    '''The binary symmetric channel flipping each bit with probability ``crossover``.'''
    eps = float(parse_rational(crossover))
    if not 0 <= eps <= 1:
        raise ValueError('crossover must be in [0, 1] (got %s)' % crossover)
    ch = DMCChannel([[1 - eps, eps], [eps, 1 - eps]], name='bsc')
    ch.params = {'crossover': crossover}
    return ch


def identity_channel(size=2):
    '''The noiseless channel on ``size`` symbols.'''
    ch = DMCChannel(np.eye(size), name='identity')
    ch.params = {'size': size}
    return ch


class BallChannel(ChannelModel):
    '''Outputs a uniform word within per-letter distortion ``D_inner`` of the input.

    For additive distortions the output is drawn exactly through the
    joint types that share the input's type as row margin; otherwise
    every word of Y^n is enumerated.

    Parameters
    ----------
    d : Distortion
    D_inner : rational
    budget : int or None, optional
        enumeration budget; None reads ``[limits] enumeration_budget``
    '''
    def __init__(self, d, D_inner, budget=None):
        D_inner = parse_rational(D_inner)
        if D_inner < 0:
            raise ValueError('D_inner must be nonnegative (got %s)' % D_inner)
        super().__init__('ball', d.nx, d.ny, {'D_inner': D_inner})
        self.d = d
        self.D_inner = D_inner
        self.budget = get_limit('enumeration_budget', budget)
        self._laws = {}
        self._words = {}

    def guarantees_within(self, D, d):
        return d is self.d and parse_rational(D) >= self.D_inner

    def _joint_law(self, counts):
        # joint types with row margin `counts` inside the ball, and their probabilities
        if counts in self._laws:
            return self._laws[counts]
        per_row = [list(iter_compositions(c, (c,) * self.ny)) for c in counts]
        total = math.prod(len(r) for r in per_row)
        if total > self.budget:
            raise EnumerationBudgetError('enumeration too large: %d conditional joint types (budget %d)'
                                         % (total, self.budget))
        joints = np.array(list(itertools.product(*per_row)), dtype=np.int64).reshape(total, self.nx, self.ny)
        inside = ~self.d.joint_exceeds(joints, self.D_inner)
        joints = joints[inside]
        if len(joints) == 0:
            raise ValueError('empty distortion ball: no output within %s of inputs of type %s' % (self.D_inner, counts))
        # number of outputs with each joint type given the input
        ln_w = gammaln(np.array(counts) + 1).sum() - gammaln(joints + 1).sum(axis=(1, 2))
        w = np.exp(ln_w - ln_w.max())
        res = (joints, w / w.sum())
        self._laws[counts] = res
        return res

    def _ball_words(self, x):
        key = tuple(x)
        if key in self._words:
            return self._words[key]
        n = len(x)
        if self.ny ** n > self.budget:
            raise EnumerationBudgetError('enumeration too large: %d output words (budget %d)' % (self.ny ** n, self.budget))
        words = np.array(list(itertools.product(range(self.ny), repeat=n)), dtype=np.int64).reshape(-1, n)
        words = words[~self.d.exceeds_batch(np.asarray(x)[np.newaxis, :], words, self.D_inner)]
        if len(words) == 0:
            raise ValueError('empty distortion ball around %s' % (key,))
        self._words[key] = words
        return words

    def transmit(self, x, random_seed=None):
        rng = np.random.default_rng(random_seed)
        x = np.asarray(x, dtype=np.int64)
        if not self.d.is_additive:
            words = self._ball_words(x)
            return words[rng.integers(len(words))].copy()
        counts = tuple(np.bincount(x, minlength=self.nx))
        joints, probs = self._joint_law(counts)
        m = joints[rng.choice(len(joints), p=probs)]
        y = np.empty_like(x)
        for a in range(self.nx):
            pos = np.flatnonzero(x == a)
            y[pos] = rng.permutation(np.repeat(np.arange(self.ny), m[a]))
        return y


def ball_channel(d, D_inner, budget=None):
    '''A :class:`BallChannel` with radius ``D_inner`` under ``d``.'''
    return BallChannel(d, D_inner, budget)


@dataclass(frozen=True)
class Wrapper:
    '''An encoder / decoder pair placed around an inner channel.'''
    name: str
    encode: object
    decode: object
    params: dict = field(default_factory=dict)


def identity_wrapper():
    return Wrapper('identity', lambda x: np.asarray(x), lambda y, ny: np.asarray(y))


def repetition_wrapper(r):
    '''Send every letter ``r`` times and decode by plurality (lowest index on ties).'''
    r = int(r)
    if r < 1:
        raise ValueError('repetition factor must be at least 1 (got %d)' % r)

    def enc(x):
        return np.repeat(np.asarray(x), r, axis=-1)

    def dec(y, ny):
        y = np.asarray(y)
        blocks = y.reshape(y.shape[:-1] + (-1, r))
        votes = (blocks[..., np.newaxis] == np.arange(ny)).sum(axis=-2)
        return votes.argmax(axis=-1)
    return Wrapper('repetition', enc, dec, {'r': r})


class ComposedChannel(ChannelModel):
    '''The channel x -> decoder(inner(encoder(x))).

    Parameters
    ----------
    wrapper : Wrapper
    inner : ChannelModel
    '''
    def __init__(self, wrapper, inner):
        params = {'inner': repr(inner)}
        params.update(wrapper.params)
        super().__init__('%s*%s' % (wrapper.name, inner.name), inner.nx, inner.ny, params)
        self.wrapper = wrapper
        self.inner = inner

    def transmit(self, x, random_seed=None):
        return self.transmit_batch(np.asarray(x)[np.newaxis, :], random_seed)[0]

    def transmit_batch(self, xs, random_seed=None):
        sent = self.wrapper.encode(np.asarray(xs, dtype=np.int64))
        received = self.inner.transmit_batch(sent, random_seed)
        return np.asarray(self.wrapper.decode(received, self.ny), dtype=np.int64)


@dataclass(frozen=True)
class DistortionProfile:
    '''Estimate of omega, the probability that the channel output exceeds D.

    ``guaranteed`` marks channels whose construction keeps omega at 0;
    their ``upper`` edge is then 0 rather than the Wilson edge.
    '''
    n: int
    D: Fraction
    omega: McEstimate
    guaranteed: bool = False

    @property
    def estimate(self):
        return self.omega.estimate

    @property
    def upper(self):
        return 0.0 if self.guaranteed else self.omega.high

    @property
    def trials(self):
        return self.omega.trials


def estimate_omega(ch, p, D, d, trials, random_seed=None, threads=1, block_size=None):
    '''Monte Carlo estimate of Pr(d(U, Y) > n * D) with U uniform on T_p and Y = ch(U).

    Parameters
    ----------
    ch : ChannelModel
    p : TypeVector
    D : rational
    d : Distortion
    trials : int
    random_seed : int, np.random.Generator instance or None, optional, default=None
        set the random number generator seed for the trials
        If int, random_seed is the seed used by the random number generator;
        If Generator instance, random_seed is set to the random number generator;
        If None, then fresh, unpredictable entropy will be pulled from the OS
    threads : int, optional
    block_size : int or None, optional

    Returns
    -------
    DistortionProfile
    '''
    if trials < 1:
        raise ValueError('trials must be at least 1 (got %d)' % trials)
    D = parse_rational(D)

    def run(block):
        size, rng = block
        us = sample_uniform_batch(p, size, rng)
        ys = ch.transmit_batch(us, rng)
        return int(d.exceeds_batch(us, ys, D).sum())

    count = sum(parallel_map(run, block_seeds(random_seed, trials, block_size), threads))
    prof = DistortionProfile(n=p.n, D=D, omega=McEstimate.from_count(count, trials),
                             guaranteed=ch.guarantees_within(D, d))
    logger.debug('omega for %r at n=%d D=%s: %d / %d' % (ch, p.n, D, count, trials))
    return prof


@dataclass(frozen=True)
class PackingResult:
    '''Decoder outcome counts of :func:`simulate_packing`.'''
    n: int
    rate: Fraction
    codebook_size: int
    counts: dict
    mode: str
    bound: float = None

    @property
    def trials(self):
        return sum(self.counts.values())

    @property
    def correct(self):
        return McEstimate.from_count(self.counts['correct'], self.trials)

    @property
    def correct_rate(self):
        return self.counts['correct'] / self.trials


def decode(y, codebook, D, d):
    '''Unique-typicality decoding.

    Returns
    -------
    tuple of (str, int or None)
        'unique' with the index of the only codeword within D of ``y``,
        'none' or 'ambiguous' with None
    '''
    typical = np.flatnonzero(~d.exceeds_batch(np.asarray(codebook, dtype=np.int64),
                                              np.asarray(y, dtype=np.int64)[np.newaxis, :], D))
    if len(typical) == 0:
        return 'none', None
    if len(typical) > 1:
        return 'ambiguous', None
    return 'unique', int(typical[0])


def _competitor_law(within, size):
    # Pr(0 typical competitors), Pr(exactly 1) among size-1 independent ones
    within = within if isinstance(within, LogProb) else LogProb.from_exact(within)
    excess = within.complement()
    k = size - 1
    p0 = float(excess.power(k))
    if k == 0 or within.log2 == -math.inf:
        return p0, 0.0
    log2_p1 = math.log2(k) + within.log2 + excess.power(k - 1).log2
    return p0, 2.0 ** log2_p1 if log2_p1 > -1100 else 0.0


def simulate_packing(ch, p, D, d, rate, trials, random_seed=None, threads=1, arith='auto',
                     literal_limit=None, block_size=None, A=None, omega=None):
    '''Empirical correct-decoding rate of random codebooks over ``ch``.

    Every trial draws a fresh codebook of independent uniform words of
    type ``p``, sends the first one through the channel and decodes the
    output with :func:`decode`. Codebooks larger than ``literal_limit``
    are not materialized: the transmitted word and the output are drawn
    as usual and the number of typical competitors is drawn from its
    exact law given the type of the output.

    Parameters
    ----------
    ch : ChannelModel
    p : TypeVector
    D : rational
    d : Distortion
    rate : rational
        bits per letter; the codebook has 2^floor(n * rate) words
    trials : int
    random_seed : int, np.random.Generator instance or None, optional, default=None
        set the random number generator seed for the trials
        If int, random_seed is the seed used by the random number generator;
        If Generator instance, random_seed is set to the random number generator;
        If None, then fresh, unpredictable entropy will be pulled from the OS
    threads : int, optional
    arith : {'exact', 'log', 'auto'}, optional
        arithmetic of the competitor law
    literal_limit : int or None, optional
        None reads ``[limits] literal_codebook_limit``
    block_size : int or None, optional
    A : Fraction or LogProb, optional
        with ``omega``, fills the analytic lower bound of the result
    omega : DistortionProfile, optional

    Returns
    -------
    PackingResult
    '''
    if trials < 1:
        raise ValueError('trials must be at least 1 (got %d)' % trials)
    D = parse_rational(D)
    rate = parse_rational(rate)
    size = codebook_size(p.n, rate)
    literal_limit = get_limit('literal_codebook_limit', literal_limit)
    mode = 'literal' if size <= literal_limit else 'collapsed'
    laws = {}

    def law(y):
        key = tuple(np.bincount(y, minlength=d.ny))
        if key not in laws:
            excess = excess_prob_fixed_y(p, y, D, d, arith)
            within = excess.complement() if isinstance(excess, LogProb) else 1 - excess
            laws[key] = _competitor_law(within, size)
        return laws[key]

    def run_literal(block):
        n_trials, rng = block
        counts = dict.fromkeys(OUTCOMES, 0)
        for _ in range(n_trials):
            codebook = sample_uniform_batch(p, size, rng)
            y = ch.transmit(codebook[0], rng)
            status, idx = decode(y, codebook, D, d)
            if status == 'unique':
                counts['correct' if idx == 0 else 'wrong_unique'] += 1
            else:
                counts[status] += 1
        return counts

    def run_collapsed(block):
        n_trials, rng = block
        counts = dict.fromkeys(OUTCOMES, 0)
        xs = sample_uniform_batch(p, n_trials, rng)
        ys = ch.transmit_batch(xs, rng)
        sent_typical = ~d.exceeds_batch(xs, ys, D)
        draws = rng.random(n_trials)
        for y, ok, r in zip(ys, sent_typical, draws):
            p0, p1 = law(y)
            others = 0 if r < p0 else (1 if r < p0 + p1 else 2)
            if ok:
                counts['correct' if others == 0 else 'ambiguous'] += 1
            else:
                counts[('none', 'wrong_unique', 'ambiguous')[others]] += 1
        return counts

    run = run_literal if mode == 'literal' else run_collapsed
    totals = dict.fromkeys(OUTCOMES, 0)
    for counts in parallel_map(run, block_seeds(random_seed, trials, block_size), threads):
        for k, v in counts.items():
            totals[k] += v
    bound = None
    if A is not None and omega is not None:
        bound = _bound(A, omega, size)
    res = PackingResult(n=p.n, rate=rate, codebook_size=size, counts=totals, mode=mode, bound=bound)
    logger.info('packing %r n=%d R=%s M=%d: correct %d / %d (%s)'
                % (ch, p.n, rate, size, totals['correct'], trials, mode))
    return res


def _bound(A, omega, size):
    return -omega.upper + float(prob_power(A, size - 1))


@dataclass(frozen=True)
class BoundCheck:
    '''Result of :func:`bound_check`.'''
    passed: bool
    margin: float
    bound: float
    slack: float


def bound_check(result, A, omega, widths=3):
    '''Test the empirical correct-decoding rate against -omega + A^(M-1).

    omega enters through the upper edge of its confidence interval.

    Parameters
    ----------
    result : PackingResult
    A : Fraction or LogProb
        the excess probability A_n of the same (p, D, d)
    omega : DistortionProfile
    widths : float, optional
        slack in Wilson half-widths of the correct-decoding rate

    Returns
    -------
    BoundCheck
        passed when rate >= bound - slack; margin is rate - bound
    '''
    bound = _bound(A, omega, result.codebook_size)
    slack = widths * result.correct.half_width
    rate = result.correct_rate
    res = BoundCheck(passed=bool(rate >= bound - slack), margin=rate - bound, bound=bound, slack=slack)
    if not res.passed:
        logger.warning('packing bound violated at n=%d R=%s: rate %.4g < bound %.4g - slack %.4g'
                       % (result.n, result.rate, rate, bound, slack))
    return res


def worst_case_excess(p, D, d, arith='auto', limit=None, budget=None):
    '''A_n computed from the channel side: inf over q of Pr(d(U, y_q) > n * D).

    y_q is any fixed word of type q; the value does not depend on which.

    Returns
    -------
    tuple of (TypeVector, Fraction or LogProb)
        the minimizing q (lexicographically first among ties) and its value
    '''
    best = None
    for q in enumerate_types(d.ny, p.n, budget):
        y = np.repeat(np.arange(d.ny), q.counts)
        val = excess_prob_fixed_y(p, y, D, d, arith, limit, budget)
        if best is None or val < best[1]:
            best = (q, val)
    return best


def achievable_rate_estimate(p, D, d, n=None, threshold=0.99, step='1/100', arith='auto', A=None):
    '''Largest grid rate whose packing bound A^(M-1) stays at least ``threshold``.

    Only rates giving at least two codewords count; the estimate is 0
    when none qualifies.

    Parameters
    ----------
    p : TypeVector
    D : rational
    d : Distortion
    n : int or None, optional
        must equal ``p.n`` when given
    threshold : float, optional
    step : rational, optional
        grid resolution in bits
    arith : {'exact', 'log', 'auto'}, optional
    A : Fraction or LogProb, optional
        precomputed A_n; computed with :func:`covpack.covering.best_q` otherwise

    Returns
    -------
    float
    '''
    if n is not None and n != p.n:
        raise ValueError('block length %d does not match the source type %s' % (n, p))
    if A is None:
        A = best_q(p, D, d, arith=arith)[1]
    step = parse_rational(step)
    best = Fraction(0)
    k = 1
    while k * step <= math.log2(d.nx):
        R = k * step
        k += 1
        size = codebook_size(p.n, R)
        if size < 2:
            continue
        if float(prob_power(A, size - 1)) >= threshold:
            best = R
        else:
            break
    return float(best)
