'''
types and type classes (:mod:`covpack.type_lab`)
================================================

.. currentmodule:: covpack.type_lab

This module contains the method-of-types plumbing: alphabets, exact
rational PMFs, type vectors, joint types, permutations, and the
multinomial arithmetic behind every probability computed by
:mod:`covpack.distortion`, both as exact big integers and in the log
domain.

Classes
^^^^^^^
.. autosummary::
   :toctree: generated

   Alphabet
   RationalPmf
   TypeVector
   JointType
   Permutation
   LogProb

Functions
^^^^^^^^^
.. autosummary::
   :toctree: generated

   lattice_constant
   type_class_size
   log2_type_class_size
   enumerate_types
   iter_compositions
   enumerate_joint_types
   pairs_with_joint_type
   log2_pairs_with_joint_type
   type_class_array
   sample_uniform
   sample_uniform_batch
   random_permutation
   apply_permutation
   choose_arith
   prob_power
'''

# ----------------------------------------------------------------------------
# Copyright (c) 2024--,  covpack development team.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file COPYING.txt, distributed with this software.
# ----------------------------------------------------------------------------

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, total_ordering, reduce
from logging import getLogger

import numpy as np
from scipy.special import comb, gammaln

from .util import get_limit, parse_rational


logger = getLogger(__name__)

_LN2 = math.log(2)

# an ExactProb is a plain Fraction in [0, 1]
ExactProb = Fraction

ARITH_POLICIES = ('exact', 'log', 'auto')


class EnumerationBudgetError(ValueError):
    '''Raised when an enumeration would exceed the configured budget.'''


@dataclass(frozen=True)
class Alphabet:
    '''An ordered finite alphabet.

    Parameters
    ----------
    symbols : tuple of str
        the distinct symbol labels; position is the symbol index
    '''
    symbols: tuple

    def __post_init__(self):
        object.__setattr__(self, 'symbols', tuple(str(s) for s in self.symbols))
        if len(self.symbols) < 1:
            raise ValueError('alphabet must contain at least one symbol')
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError('alphabet labels must be unique (got %s)' % (self.symbols,))

    @classmethod
    def from_labels(cls, labels):
        '''Build from a list of labels or a comma separated string.'''
        if isinstance(labels, str):
            labels = [x.strip() for x in labels.split(',') if x.strip()]
        return cls(tuple(labels))

    @property
    def size(self):
        return len(self.symbols)

    def index(self, symbol):
        try:
            return self.symbols.index(str(symbol))
        except ValueError:
            raise ValueError('symbol %r not in alphabet %s' % (symbol, self.symbols))

    def encode(self, seq):
        '''Convert a sequence of labels to an index array.'''
        return np.array([self.index(s) for s in seq], dtype=np.int64)

    def decode(self, idx):
        '''Convert an index array back to labels.'''
        return [self.symbols[i] for i in idx]


def lattice_constant(pmf):
    '''Return the least block length at which the exact type ``pmf`` exists.

    Parameters
    ----------
    pmf : iterable of rationals
        the probabilities (Fraction, int or "num/den" strings)

    Returns
    -------
    int
        n0, the lcm of the reduced denominators

    Raises
    ------
    ValueError
        if a probability is negative or they do not sum to exactly 1

    Examples
    --------
    >>> lattice_constant(['1/2', '1/2'])
    2
    >>> lattice_constant(['1/6', '1/3', '1/2'])
    6
    '''
    probs = [parse_rational(x) for x in pmf]
    if len(probs) == 0:
        raise ValueError('empty pmf')
    if any(x < 0 for x in probs):
        raise ValueError('pmf has negative entries: %s' % probs)
    if sum(probs) != 1:
        raise ValueError('pmf sums to %s, not exactly 1' % sum(probs))
    return reduce(lambda a, b: a * b // math.gcd(a, b), (x.denominator for x in probs), 1)


@dataclass(frozen=True)
class TypeVector:
    '''The composition of a length-n sequence.

    Parameters
    ----------
    counts : tuple of int
        number of occurrences of each symbol index
    '''
    counts: tuple

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, 'counts', counts)
        if len(counts) < 1:
            raise ValueError('type vector needs at least one symbol')
        if any(c < 0 for c in counts):
            raise ValueError('type counts must be nonnegative (got %s)' % (counts,))
        if sum(counts) < 1:
            raise ValueError('type block length must be positive (got %s)' % (counts,))

    @classmethod
    def from_sequence(cls, seq, size):
        '''The type of the index sequence ``seq`` over an alphabet of ``size`` symbols.'''
        seq = np.asarray(seq, dtype=np.int64)
        if len(seq) and (seq.min() < 0 or seq.max() >= size):
            raise ValueError('sequence symbols outside alphabet of size %d' % size)
        return cls(tuple(np.bincount(seq, minlength=size)))

    @property
    def n(self):
        return sum(self.counts)

    @property
    def size(self):
        return len(self.counts)

    def as_array(self):
        return np.array(self.counts, dtype=np.int64)

    def __str__(self):
        return '(%s)' % ','.join(str(c) for c in self.counts)


@dataclass(frozen=True)
class RationalPmf:
    '''An exact rational source distribution.

    Parameters
    ----------
    probs : tuple of Fraction
        probability of each symbol index
    alphabet : Alphabet or None, optional
        the labels; defaults to "0", "1", ...
    '''
    probs: tuple
    alphabet: Alphabet = None

    def __post_init__(self):
        probs = tuple(parse_rational(x) for x in self.probs)
        object.__setattr__(self, 'probs', probs)
        # validates the sum and the signs
        lattice_constant(probs)
        if self.alphabet is None:
            object.__setattr__(self, 'alphabet', Alphabet(tuple(str(i) for i in range(len(probs)))))
        elif self.alphabet.size != len(probs):
            raise ValueError('pmf has %d entries but alphabet has %d symbols' % (len(probs), self.alphabet.size))

    @classmethod
    def from_strings(cls, values, alphabet=None):
        '''Build from "num/den" strings (or a comma separated string of them).'''
        if isinstance(values, str):
            values = [x for x in values.split(',') if x.strip()]
        return cls(tuple(parse_rational(x) for x in values), alphabet)

    @property
    def n0(self):
        return lattice_constant(self.probs)

    @property
    def size(self):
        return len(self.probs)

    def type_at(self, n):
        '''The exact type of this pmf at block length ``n``.

        Raises
        ------
        ValueError
            if ``n`` is not a multiple of the lattice constant
        '''
        if n < 1 or n % self.n0:
            raise ValueError('block length %d is not a positive multiple of n0=%d' % (n, self.n0))
        return TypeVector(tuple(int(p * n) for p in self.probs))

    def lengths(self, max_length):
        '''All lattice block lengths n0, 2*n0, ... up to ``max_length``.'''
        return list(range(self.n0, max_length + 1, self.n0))

    def as_array(self):
        return np.array([float(p) for p in self.probs])


@dataclass(frozen=True)
class JointType:
    '''The joint composition of a pair of aligned sequences.

    Parameters
    ----------
    counts : tuple of tuple of int
        ``counts[x][y]`` is the number of positions holding the pair (x, y)
    '''
    counts: tuple

    def __post_init__(self):
        counts = tuple(tuple(int(c) for c in row) for row in self.counts)
        object.__setattr__(self, 'counts', counts)
        if len(counts) < 1 or len(counts[0]) < 1:
            raise ValueError('joint type must be a nonempty matrix')
        if len(set(len(row) for row in counts)) != 1:
            raise ValueError('joint type rows have different lengths')
        if any(c < 0 for row in counts for c in row):
            raise ValueError('joint type entries must be nonnegative')
        if self.n < 1:
            raise ValueError('joint type block length must be positive')

    @classmethod
    def from_sequences(cls, x, y, nx, ny):
        x = np.asarray(x, dtype=np.int64)
        y = np.asarray(y, dtype=np.int64)
        if len(x) != len(y):
            raise ValueError('sequence lengths differ (%d != %d)' % (len(x), len(y)))
        flat = np.bincount(x * ny + y, minlength=nx * ny)
        return cls(tuple(tuple(r) for r in flat.reshape(nx, ny)))

    @property
    def n(self):
        return sum(sum(row) for row in self.counts)

    @property
    def row_type(self):
        return TypeVector(tuple(sum(row) for row in self.counts))

    @property
    def col_type(self):
        return TypeVector(tuple(sum(col) for col in zip(*self.counts)))

    def as_array(self):
        return np.array(self.counts, dtype=np.int64)


@dataclass(frozen=True)
class Permutation:
    '''A rearrangement of the positions 0..n-1.

    ``mapping[i]`` is the position of the input read into output position i.
    '''
    mapping: tuple

    def __post_init__(self):
        mapping = tuple(int(i) for i in self.mapping)
        object.__setattr__(self, 'mapping', mapping)
        if sorted(mapping) != list(range(len(mapping))):
            raise ValueError('mapping is not a bijection on 0..%d' % (len(mapping) - 1))

    @classmethod
    def from_one_based(cls, mapping):
        '''Build from the 1-based notation, e.g. (2, 1) for the swap.'''
        return cls(tuple(int(i) - 1 for i in mapping))

    @classmethod
    def identity(cls, n):
        return cls(tuple(range(n)))

    @classmethod
    def random(cls, n, random_seed=None):
        rng = np.random.default_rng(random_seed)
        return cls(tuple(rng.permutation(n)))

    @property
    def n(self):
        return len(self.mapping)


@total_ordering
@dataclass(frozen=True, eq=True)
class LogProb:
    '''A probability held as base-2 logarithms of itself and its complement.

    Keeping ``log2_complement`` lets values within 2^-1000 of one (the
    excess-distortion probabilities of long blocks) remain distinguishable.

    Parameters
    ----------
    log2 : float
        log2 Pr(E), in [-inf, 0]
    log2_complement : float
        log2 Pr(not E), in [-inf, 0]
    '''
    log2: float
    log2_complement: float

    def __post_init__(self):
        if self.log2 > 1e-9 or self.log2_complement > 1e-9:
            raise ValueError('log probabilities must be <= 0 (got %r, %r)' % (self.log2, self.log2_complement))
        object.__setattr__(self, 'log2', min(float(self.log2), 0.0))
        object.__setattr__(self, 'log2_complement', min(float(self.log2_complement), 0.0))

    @classmethod
    def from_exact(cls, p):
        '''Convert an ExactProb; monotone and accurate to double precision.'''
        p = Fraction(p)
        if p < 0 or p > 1:
            raise ValueError('probability %s outside [0, 1]' % p)
        return cls(_log2_fraction(p), _log2_fraction(1 - p))

    @classmethod
    def from_log2(cls, log2):
        '''Build from log2 Pr(E) alone; the complement is derived with expm1.'''
        if log2 == -math.inf:
            return cls(-math.inf, 0.0)
        c = -math.expm1(log2 * _LN2)
        return cls(log2, math.log2(c) if c > 0 else -math.inf)

    @classmethod
    def from_split(cls, log2_event, log2_complement):
        '''Normalize a pair of unnormalized log2 masses.'''
        total = np.logaddexp2(log2_event, log2_complement)
        if total == -math.inf:
            raise ValueError('both masses are zero')
        return cls(float(log2_event - total), float(log2_complement - total))

    def __float__(self):
        return 2.0 ** self.log2

    def complement(self):
        return LogProb(self.log2_complement, self.log2)

    def _ln(self):
        # natural log of the probability, accurate also near one
        if self.log2 == -math.inf:
            return -math.inf
        if self.log2_complement < -1:
            return math.log1p(-2.0 ** self.log2_complement)
        return self.log2 * _LN2

    def power(self, k):
        '''The probability raised to the integer power ``k`` (k may be huge).'''
        if k < 0:
            raise ValueError('negative power %d' % k)
        if k == 0:
            return LogProb(0.0, -math.inf)
        ln = self._ln()
        if ln == -math.inf:
            return LogProb(-math.inf, 0.0)
        t = float(k) * ln
        c = -math.expm1(t)
        return LogProb(t / _LN2, math.log2(c) if c > 0 else -math.inf)

    def _key(self):
        if self.log2 <= -1:
            return (0, self.log2)
        return (1, -self.log2_complement)

    def __lt__(self, other):
        return self._key() < to_log_prob(other)._key()

    def __repr__(self):
        return 'LogProb(%.6g, complement=2^%.6g)' % (float(self), self.log2_complement)


def _log2_fraction(p):
    if p == 0:
        return -math.inf
    return math.log2(p.numerator) - math.log2(p.denominator)


def to_log_prob(p):
    '''Return ``p`` as a LogProb whether it is exact or already logarithmic.'''
    if isinstance(p, LogProb):
        return p
    return LogProb.from_exact(p)


def prob_float(p):
    '''A float view of an ExactProb or LogProb.'''
    return float(p)


def prob_power(p, k, exact_power_limit=None):
    '''Raise an ExactProb or LogProb to the power ``k``.

    ExactProb stays exact while ``k`` is at most ``exact_power_limit``
    (``[limits] exact_power_limit`` by default); larger powers switch to
    the log domain. 0 and 1 are returned exactly for any ``k``.
    '''
    if isinstance(p, LogProb):
        return p.power(k)
    p = Fraction(p)
    if k == 0:
        return Fraction(1)
    if p in (0, 1):
        return p
    if k <= get_limit('exact_power_limit', exact_power_limit):
        return p ** k
    return LogProb.from_exact(p).power(k)


def choose_arith(arith, n, joint_count=None):
    '''Resolve the arithmetic policy for a block length.

    Parameters
    ----------
    arith : {'exact', 'log', 'auto'}
        'auto' uses exact rationals when ``n`` is at most
        ``[limits] exact_max_length`` and ``joint_count`` (if known) is within
        the enumeration budget, logs otherwise
    n : int
        the block length
    joint_count : int or None, optional
        number of joint types involved, if known

    Returns
    -------
    str
        'exact' or 'log'
    '''
    if arith not in ARITH_POLICIES:
        raise ValueError('unknown arithmetic policy %r. Options are %s' % (arith, ARITH_POLICIES))
    if arith != 'auto':
        return arith
    if n > get_limit('exact_max_length'):
        return 'log'
    if joint_count is not None and joint_count > get_limit('enumeration_budget'):
        return 'log'
    return 'exact'


def multinomial(counts):
    '''Exact multinomial coefficient sum(counts)! / prod(counts!).'''
    result = 1
    running = 0
    for c in counts:
        running += int(c)
        result *= comb(running, int(c), exact=True)
    return result


def log2_multinomial(counts):
    '''log2 of :func:`multinomial` through log-gamma.'''
    counts = np.asarray(counts, dtype=float)
    return float((gammaln(counts.sum() + 1) - gammaln(counts + 1).sum()) / _LN2)


def type_class_size(t):
    '''Number of sequences of type ``t`` (exact big integer).

    Examples
    --------
    >>> type_class_size(TypeVector((1, 2, 3)))
    60
    '''
    return multinomial(t.counts)


def log2_type_class_size(t):
    '''log2 of :func:`type_class_size` computed with log-gamma.'''
    return log2_multinomial(t.counts)


def count_types(alphabet_size, n):
    '''Number of types of length ``n`` on ``alphabet_size`` symbols (stars and bars).'''
    return comb(n + alphabet_size - 1, alphabet_size - 1, exact=True)


def iter_compositions(total, caps):
    '''Compositions of ``total`` whose part j is at most ``caps[j]``, lexicographic ascending.

    Examples
    --------
    >>> list(iter_compositions(2, (1, 2)))
    [(0, 2), (1, 1)]
    '''
    if len(caps) == 1:
        if total <= caps[0]:
            yield (total,)
        return
    rest = sum(caps[1:])
    for v in range(max(0, total - rest), min(total, caps[0]) + 1):
        for tail in iter_compositions(total - v, caps[1:]):
            yield (v,) + tail


def enumerate_types(alphabet_size, n, budget=None):
    '''All types of block length ``n`` on ``alphabet_size`` symbols.

    Parameters
    ----------
    alphabet_size : int
    n : int
    budget : int or None, optional
        refuse when more types than this exist; None reads
        ``[limits] enumeration_budget``

    Returns
    -------
    list of TypeVector
        in lexicographic order of the counts

    Raises
    ------
    EnumerationBudgetError
        if the number of types exceeds the budget
    '''
    if alphabet_size < 1 or n < 1:
        raise ValueError('alphabet size and block length must be positive (got %d, %d)' % (alphabet_size, n))
    budget = get_limit('enumeration_budget', budget)
    total = count_types(alphabet_size, n)
    if total > budget:
        raise EnumerationBudgetError('enumeration too large: %d types of length %d on %d symbols (budget %d)'
                                     % (total, n, alphabet_size, budget))
    return [TypeVector(c) for c in iter_compositions(n, (n,) * alphabet_size)]


def _iter_joint(rows, caps):
    if len(rows) == 1:
        # the last row is forced by the remaining column sums
        yield (tuple(caps),)
        return
    for r in iter_compositions(rows[0], caps):
        rem = tuple(c - v for c, v in zip(caps, r))
        for others in _iter_joint(rows[1:], rem):
            yield (r,) + others


@lru_cache(maxsize=4096)
def _joint_counts(row, col, budget):
    found = []
    for m in _iter_joint(row, col):
        found.append(m)
        if len(found) > budget:
            raise EnumerationBudgetError('enumeration too large: more than %d joint types with margins %s, %s'
                                         % (budget, row, col))
    return tuple(found)


def enumerate_joint_types(row, col, budget=None):
    '''All joint types with the given margins.

    Parameters
    ----------
    row : TypeVector
        the type on the first alphabet (row sums)
    col : TypeVector
        the type on the second alphabet (column sums)
    budget : int or None, optional
        refuse beyond this many joint types; None reads the config

    Returns
    -------
    list of JointType
        in lexicographic order of the row-major entries

    Raises
    ------
    EnumerationBudgetError
        if there are more joint types than the budget
    '''
    return [JointType(m) for m in joint_counts(row, col, budget)]


def joint_counts(row, col, budget=None):
    '''Like :func:`enumerate_joint_types` but as a cached tuple of nested tuples.'''
    if row.n != col.n:
        raise ValueError('margins have different block lengths (%d != %d)' % (row.n, col.n))
    budget = get_limit('enumeration_budget', budget)
    return _joint_counts(row.counts, col.counts, budget)


def joint_array(row, col, budget=None):
    '''Joint types with the given margins stacked into a (K, |X|, |Y|) int array.'''
    found = joint_counts(row, col, budget)
    return np.array(found, dtype=np.int64).reshape(len(found), row.size, col.size)


def pairs_with_joint_type(j):
    '''Number of sequence pairs having joint type ``j`` (exact big integer).

    Examples
    --------
    >>> pairs_with_joint_type(JointType(((1, 1), (1, 1))))
    24
    '''
    return multinomial([c for row in j.counts for c in row])


def log2_pairs_with_joint_type(j):
    '''log2 of :func:`pairs_with_joint_type` computed with log-gamma.'''
    return log2_multinomial([c for row in j.counts for c in row])


def _build_class_rows(counts, memo):
    if counts in memo:
        return memo[counts]
    if sum(counts) == 0:
        res = np.zeros((1, 0), dtype=np.int64)
    else:
        blocks = []
        for a, c in enumerate(counts):
            if c == 0:
                continue
            rest = counts[:a] + (c - 1,) + counts[a + 1:]
            sub = _build_class_rows(rest, memo)
            blocks.append(np.hstack([np.full((sub.shape[0], 1), a, dtype=np.int64), sub]))
        res = np.vstack(blocks)
    memo[counts] = res
    return res


@lru_cache(maxsize=32)
def _class_rows(counts):
    res = _build_class_rows(counts, {})
    res.setflags(write=False)
    return res


def type_class_array(t, limit=None):
    '''The whole type class of ``t`` as an integer array.

    Parameters
    ----------
    t : TypeVector
    limit : int or None, optional
        refuse classes larger than this; None reads
        ``[limits] class_enumeration_limit``

    Returns
    -------
    numpy.ndarray
        read-only array of shape (|T_t|, n), rows in lexicographic order

    Raises
    ------
    EnumerationBudgetError
        if the class is larger than ``limit``
    '''
    limit = get_limit('class_enumeration_limit', limit)
    size = type_class_size(t)
    if size > limit:
        raise EnumerationBudgetError('enumeration too large: type class %s has %d members (limit %d)' % (t, size, limit))
    logger.debug('materializing type class %s with %d members' % (t, size))
    return _class_rows(t.counts)


def sample_uniform(t, random_seed=None):
    '''Draw one sequence uniformly from the type class of ``t``.

    Parameters
    ----------
    t : TypeVector
    random_seed : int, np.random.Generator instance or None, optional, default=None
        set the random number generator seed
        If int, random_seed is the seed used by the random number generator;
        If Generator instance, random_seed is set to the random number generator;
        If None, then fresh, unpredictable entropy will be pulled from the OS

    Returns
    -------
    numpy.ndarray of int
        a uniformly shuffled copy of the canonical multiset
    '''
    rng = np.random.default_rng(random_seed)
    return rng.permutation(np.repeat(np.arange(t.size), t.counts))


def sample_uniform_batch(t, size, random_seed=None):
    '''Draw ``size`` independent uniform members of the type class of ``t``.

    Returns
    -------
    numpy.ndarray of int
        shape (size, n)
    '''
    rng = np.random.default_rng(random_seed)
    canonical = np.repeat(np.arange(t.size), t.counts)
    return rng.permuted(np.tile(canonical, (size, 1)), axis=1)


def apply_permutation(perm, seq):
    '''Rearrange ``seq`` so that ``output[i] = seq[perm.mapping[i]]``.

    Raises
    ------
    ValueError
        if the lengths differ
    '''
    seq = np.asarray(seq)
    if perm.n != len(seq):
        raise ValueError('permutation length %d does not match sequence length %d' % (perm.n, len(seq)))
    return seq[np.array(perm.mapping, dtype=np.int64)]


def random_permutation(n, random_seed=None):
    '''A uniformly random :class:`Permutation` of ``n`` positions.'''
    return Permutation.random(n, random_seed)
