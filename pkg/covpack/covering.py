'''
covering with random codebooks (:mod:`covpack.covering`)
========================================================

.. currentmodule:: covpack.covering

The source-coding side. A codebook of 2^floor(n*R) words drawn
independently and uniformly from the type class of q covers a source
word u when some codeword is within per-letter distortion D of it.
Failure to cover has probability A^M, where A is the both-random excess
probability and M the codebook size.

Classes
^^^^^^^
.. autosummary::
   :toctree: generated

   CoveringConfig
   CoveringResult

Functions
^^^^^^^^^
.. autosummary::
   :toctree: generated

   codebook_size
   encode
   simulate_covering
   analytic_failure
   q_table
   best_q
   rate_exponent
   beta
   log2_beta
   exponent_table
'''

# ----------------------------------------------------------------------------
# Copyright (c) 2024--,  covpack development team.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file COPYING.txt, distributed with this software.
# ----------------------------------------------------------------------------

import math
from dataclasses import dataclass, field
from fractions import Fraction
from logging import getLogger

import numpy as np
import pandas as pd

from .type_lab import TypeVector, LogProb, enumerate_types, prob_power, sample_uniform, sample_uniform_batch
from .distortion import Distortion, McEstimate, excess_prob_split, excess_prob_both_random
from .util import parse_rational, format_rational, get_limit, block_seeds, parallel_map
from ._doc import ds


logger = getLogger(__name__)


def codebook_size(n, rate):
    '''2^floor(n * rate), computed with the rate as an exact rational.

    Examples
    --------
    >>> codebook_size(128, '1/4')
    4294967296
    >>> codebook_size(2, 0)
    1
    '''
    rate = parse_rational(rate)
    if rate < 0:
        raise ValueError('rate must be nonnegative (got %s)' % rate)
    return 2 ** math.floor(n * rate)


@dataclass(frozen=True)
class CoveringConfig:
    '''One covering experiment.

    Parameters
    ----------
    p : TypeVector
        the source type on X
    q : TypeVector or None
        the codeword type on Y; None to use the best type (:func:`best_q`)
    D : Fraction
        per-letter distortion threshold
    rate : Fraction
        bits per letter
    d : Distortion
    trials : int
    seed : int or None
    '''
    p: TypeVector
    q: TypeVector
    D: Fraction
    rate: Fraction
    d: Distortion
    trials: int = 1000
    seed: int = None

    def __post_init__(self):
        object.__setattr__(self, 'D', parse_rational(self.D))
        object.__setattr__(self, 'rate', parse_rational(self.rate))
        if self.q is not None and self.q.n != self.p.n:
            raise ValueError('p and q have different block lengths (%d != %d)' % (self.p.n, self.q.n))
        if self.D < 0:
            raise ValueError('D must be nonnegative (got %s)' % self.D)
        if self.trials < 1:
            raise ValueError('trials must be at least 1 (got %d)' % self.trials)
        # validates the rate
        codebook_size(self.p.n, self.rate)

    @property
    def n(self):
        return self.p.n

    @property
    def codebook_size(self):
        return codebook_size(self.n, self.rate)


@dataclass(frozen=True)
class CoveringResult:
    '''Outcome of :func:`simulate_covering`.

    ``mode`` is 'literal' when codebooks were materialized and
    'collapsed' when the failure indicator was drawn from its exact law.
    '''
    failure: McEstimate
    analytic: object
    q: TypeVector
    codebook_size: int
    mode: str
    table: pd.DataFrame = field(default=None, compare=False)

    @property
    def calibrated(self):
        '''True when the empirical rate was simulated independently of the analytic value.'''
        return self.mode == 'literal'

    @property
    def within_interval(self):
        '''Whether the analytic failure lies in the Wilson interval of the empirical rate.

        Only informative when :attr:`calibrated`; collapsed draws come from
        the analytic law itself.
        '''
        return self.failure.low <= float(self.analytic) <= self.failure.high


def encode(u, codebook, D, d):
    '''Index of the first codeword within distortion D of ``u``, or None.

    Parameters
    ----------
    u : array-like of int
        the source word
    codebook : 2-d array-like of int
        one codeword per row
    D : rational
    d : Distortion

    Returns
    -------
    int or None
    '''
    u = np.asarray(u, dtype=np.int64)
    ok = ~d.exceeds_batch(u[np.newaxis, :], np.asarray(codebook, dtype=np.int64), D)
    if not ok.any():
        return None
    return int(np.argmax(ok))


def analytic_failure(p, q, D, d, codebook_size, arith='auto', exact_power_limit=None, budget=None):
    '''Pr(no codeword covers u) = A^M for a codebook of ``codebook_size`` words.

    Parameters
    ----------
    p, q : TypeVector
    D : rational
    d : Distortion
    codebook_size : int
    arith : {'exact', 'log', 'auto'}, optional
    exact_power_limit : int or None, optional
        largest exponent raised exactly; None reads ``[limits] exact_power_limit``
    budget : int or None, optional

    Returns
    -------
    Fraction or LogProb

    Examples
    --------
    >>> from covpack.distortion import hamming
    >>> analytic_failure(TypeVector((1, 1)), TypeVector((1, 1)), 0, hamming(), 3, arith='exact')
    Fraction(1, 8)
    '''
    if codebook_size < 1:
        raise ValueError('codebook size must be at least 1 (got %d)' % codebook_size)
    A = excess_prob_both_random(p, q, D, d, arith, budget)
    return prob_power(A, codebook_size, exact_power_limit)


def simulate_covering(cfg, random_seed=None, threads=1, arith='auto', literal_limit=None, block_size=None):
    '''Empirical failure rate of random covering codebooks.

    Each trial draws a fresh codebook of independent uniform type-q words
    and a fresh source word uniform on the type class of p; the trial
    fails when :func:`encode` finds no codeword within D.

    Parameters
    ----------
    cfg : CoveringConfig
    random_seed : int, np.random.Generator instance or None, optional, default=None
        set the random number generator seed; None uses ``cfg.seed``
        If int, random_seed is the seed used by the random number generator;
        If Generator instance, random_seed is set to the random number generator;
        If None, then fresh, unpredictable entropy will be pulled from the OS
    threads : int, optional
    arith : {'exact', 'log', 'auto'}, optional
        arithmetic policy of the analytic value
    literal_limit : int or None, optional
        largest codebook materialized; larger ones draw the failure
        indicator from Bernoulli(A^M). None reads ``[limits] literal_codebook_limit``
    block_size : int or None, optional

    Returns
    -------
    CoveringResult
    '''
    if random_seed is None:
        random_seed = cfg.seed
    p, D, d = cfg.p, cfg.D, cfg.d
    table = None
    if cfg.q is None:
        table = q_table(p, D, d, arith=arith, threads=threads)
        q = _best_row(table)[0]
    else:
        q = cfg.q
    size = cfg.codebook_size
    analytic = analytic_failure(p, q, D, d, size, arith)
    literal_limit = get_limit('literal_codebook_limit', literal_limit)
    mode = 'literal' if size <= literal_limit else 'collapsed'
    logger.debug('covering n=%d q=%s M=%d mode=%s' % (p.n, q, size, mode))

    def run(block):
        trials, rng = block
        if mode == 'collapsed':
            return int((rng.random(trials) < float(analytic)).sum())
        failures = 0
        for _ in range(trials):
            codebook = sample_uniform_batch(q, size, rng)
            u = sample_uniform(p, rng)
            if encode(u, codebook, D, d) is None:
                failures += 1
        return failures

    count = sum(parallel_map(run, block_seeds(random_seed, cfg.trials, block_size), threads))
    res = CoveringResult(failure=McEstimate.from_count(count, cfg.trials), analytic=analytic, q=q,
                         codebook_size=size, mode=mode, table=table)
    logger.info('covering n=%d R=%s: empirical failure %.4g, analytic %.4g'
                % (p.n, cfg.rate, res.failure.estimate, float(analytic)))
    return res


def _sweep(p, D, d, arith, budget, threads):
    qs = enumerate_types(d.ny, p.n, budget)
    splits = parallel_map(lambda q: excess_prob_split(p, q, D, d, arith, budget), qs, threads)
    return list(zip(qs, splits))


def q_table(p, D, d, arith='auto', budget=None, threads=1):
    '''The excess probability for every reproduction type q of length n.

    Returns
    -------
    pandas.DataFrame
        one row per q in lexicographic order, with columns 'q' (TypeVector),
        'A' (Fraction or LogProb), 'A_float', 'log2_within' (log2 Pr(<= D))
    '''
    rows = []
    for q, (le, gt) in _sweep(p, D, d, arith, budget, threads):
        rows.append({'q': q, 'A': gt, 'within': le, 'A_float': float(gt),
                     'log2_within': _log2(le)})
    return pd.DataFrame(rows, columns=['q', 'A', 'within', 'A_float', 'log2_within'])


def _log2(x):
    if isinstance(x, LogProb):
        return x.log2
    return LogProb.from_exact(x).log2


def _best_row(table):
    # first minimum in lexicographic q order
    best = 0
    for i in range(1, len(table)):
        if table['A'].iloc[i] < table['A'].iloc[best]:
            best = i
    row = table.iloc[best]
    return row['q'], row['A'], row['within']


@ds.with_indent(4)
def best_q(p, D, d, n=None, arith='auto', budget=None, threads=1):
    '''The reproduction type minimizing the both-random excess probability.

    Parameters
    ----------
    p : TypeVector
    D : rational
    d : Distortion
    n : int or None, optional
        the block length; must equal ``p.n`` when given
    %(sweep.parameters)s

    Returns
    -------
    tuple of (TypeVector, Fraction or LogProb)
        the minimizing q (lexicographically first among ties) and A_n

    Examples
    --------
    >>> from covpack.distortion import hamming
    >>> best_q(TypeVector((1, 1)), 0, hamming(), arith='exact')
    (TypeVector(counts=(1, 1)), Fraction(1, 2))
    '''
    if n is not None and n != p.n:
        raise ValueError('block length %d does not match the source type %s' % (n, p))
    q, A, _ = _best_row(q_table(p, D, d, arith, budget, threads))
    return q, A


def log2_beta(p, D, d, arith='auto', budget=None, threads=1):
    '''log2 of inf_q 1 / Pr(d(U, V_q) <= n * D); math.inf if nothing is ever covered.'''
    _, _, within = _best_row(q_table(p, D, d, arith, budget, threads))
    lw = _log2(within)
    if lw == -math.inf:
        return math.inf
    return max(0.0, -lw)


def beta(p, D, d, arith='auto', budget=None, threads=1):
    '''inf_q 1 / Pr(d(U, V_q) <= n * D), the approximate number of codewords needed.

    Returns
    -------
    Fraction or float
        exact when the arithmetic is exact, else a float (possibly inf)
    '''
    _, _, within = _best_row(q_table(p, D, d, arith, budget, threads))
    if isinstance(within, LogProb):
        return 2.0 ** -within.log2 if within.log2 > -1024 else math.inf
    if within == 0:
        return math.inf
    return 1 / within


def rate_exponent(p, D, d, n=None, arith='auto', budget=None, threads=1):
    '''(1/n) log2 beta, the finite-length rate needed to cover the type class of p.

    Returns
    -------
    float
        nonnegative; math.inf when no reproduction type ever covers
    '''
    if n is not None and n != p.n:
        raise ValueError('block length %d does not match the source type %s' % (n, p))
    return log2_beta(p, D, d, arith, budget, threads) / p.n


@ds.with_indent(4)
def exponent_table(pmf, D, d, lengths, arith='auto', budget=None, threads=1):
    '''Best type, A_n, log2 beta and the rate exponent along block lengths.

    Parameters
    ----------
    pmf : RationalPmf
        the source distribution; the source type at each n is ``pmf.type_at(n)``
    D : rational
    d : Distortion
    lengths : list of int
        block lengths, each a multiple of ``pmf.n0``
    %(sweep.parameters)s

    Returns
    -------
    pandas.DataFrame
        columns 'n', 'q', 'A', 'A_exact', 'log2_beta', 'exponent'
    '''
    rows = []
    for n in lengths:
        p = pmf.type_at(n)
        q, A, within = _best_row(q_table(p, D, d, arith, budget, threads))
        lw = _log2(within)
        lb = math.inf if lw == -math.inf else max(0.0, -lw)
        rows.append({'n': n, 'q': str(q), 'A': float(A),
                     'A_exact': format_rational(A) if isinstance(A, Fraction) else '',
                     'log2_beta': lb, 'exponent': lb / n})
        logger.debug('exponent at n=%d: q=%s exponent=%s' % (n, q, lb / n))
    return pd.DataFrame(rows, columns=['n', 'q', 'A', 'A_exact', 'log2_beta', 'exponent'])
