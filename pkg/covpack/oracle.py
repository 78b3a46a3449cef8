'''
rate-distortion references (:mod:`covpack.oracle`)
==================================================

.. currentmodule:: covpack.oracle

Floating-point references for the finite-length exponents: the
Blahut-Arimoto computation of the i.i.d. rate-distortion function and
the closed form for a uniform binary source under Hamming distortion.
Nothing here feeds the exact computations.

Classes
^^^^^^^
.. autosummary::
   :toctree: generated

   RdCurvePoint

Functions
^^^^^^^^^
.. autosummary::
   :toctree: generated

   blahut_arimoto
   binary_entropy
   binary_hamming_rd
   d_max
   d_min
   rd_curve
'''

# ----------------------------------------------------------------------------
# Copyright (c) 2024--,  covpack development team.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file COPYING.txt, distributed with this software.
# ----------------------------------------------------------------------------

from dataclasses import dataclass
from logging import getLogger

import numpy as np
import pandas as pd
from scipy.special import xlogy
from scipy.stats import entropy

from .type_lab import RationalPmf
from .distortion import AdditiveDistortion
from .util import get_limit


logger = getLogger(__name__)

# slope search interval
S_MIN = -50.0
S_MAX = 0.0
BISECTION_STEPS = 100


@dataclass(frozen=True)
class RdCurvePoint:
    '''One point of a rate-distortion curve.

    Parameters
    ----------
    D : float
        the distortion reached
    R : float
        the rate in bits per letter
    converged : bool
        whether the inner iteration met its tolerance
    iterations : int
        inner iterations of the final slope
    s : float
        the slope parameter, <= 0
    '''
    D: float
    R: float
    converged: bool
    iterations: int
    s: float


def _as_arrays(p, d):
    if isinstance(p, RationalPmf):
        p = p.as_array()
    p = np.asarray(p, dtype=float)
    if isinstance(d, AdditiveDistortion):
        d = [[float(v) for v in row] for row in d.matrix]
    d = np.asarray(d, dtype=float)
    if p.ndim != 1 or d.ndim != 2 or d.shape[0] != len(p):
        raise ValueError('pmf of length %d does not fit a distortion matrix of shape %s' % (len(p), d.shape))
    if (p < 0).any() or not np.isclose(p.sum(), 1):
        raise ValueError('not a probability vector: %s' % p)
    return p, d


def d_max(p, d):
    '''Least distortion of a constant reproduction: min over y of E_p[d(X, y)].'''
    p, d = _as_arrays(p, d)
    return float((p @ d).min())


def d_min(p, d):
    '''E_p[min over y of d(X, y)], the least achievable distortion.'''
    p, d = _as_arrays(p, d)
    return float(p @ d.min(axis=1))


def binary_entropy(x):
    '''h(x) in bits.'''
    if not 0 <= x <= 1:
        raise ValueError('binary entropy needs x in [0, 1] (got %r)' % x)
    return float(entropy([x, 1 - x], base=2))


def binary_hamming_rd(D):
    '''R(D) = 1 - h(D) of the uniform binary source under Hamming distortion, 0 beyond 1/2.

    Examples
    --------
    >>> binary_hamming_rd(0)
    1.0
    >>> binary_hamming_rd(0.5)
    0.0
    '''
    if D < 0:
        raise ValueError('D must be nonnegative (got %r)' % D)
    if D >= 0.5:
        return 0.0
    return max(0.0, 1.0 - binary_entropy(D))


def _iterate(p, d, s, tol, max_iterations):
    # alternating minimization at a fixed slope; returns (D, R, converged, iterations)
    kernel = np.exp(s * d)
    q = np.full(d.shape[1], 1.0 / d.shape[1])
    rate = np.inf
    for it in range(1, max_iterations + 1):
        a = kernel * q
        cond = a / a.sum(axis=1, keepdims=True)
        q = p @ cond
        joint = p[:, np.newaxis] * cond
        new_rate = float(np.sum(xlogy(joint, cond) - xlogy(joint, q[np.newaxis, :])) / np.log(2))
        if abs(new_rate - rate) < tol:
            return float(np.sum(joint * d)), max(new_rate, 0.0), True, it
        rate = new_rate
    return float(np.sum(joint * d)), max(rate, 0.0), False, max_iterations


def blahut_arimoto(p, d, D, tol=None, max_iterations=None):
    '''The i.i.d. rate-distortion function at ``D``.

    The slope s is bisected on [-50, 0] until the Blahut-Arimoto
    distortion at s matches ``D``; at or beyond the largest useful
    distortion the rate is 0, at or below the least achievable one the
    steepest slope is used.

    Parameters
    ----------
    p : array-like of float or RationalPmf
        the source distribution
    d : 2-d array-like of float or AdditiveDistortion
        per-letter distortion matrix
    D : float
        target distortion, >= 0
    tol : float or None, optional
        tolerance on successive rate iterates and on the distortion;
        None reads ``[oracle] ba_tol``
    max_iterations : int or None, optional
        inner iteration cap; None reads ``[oracle] ba_max_iterations``

    Returns
    -------
    RdCurvePoint
    '''
    p, d = _as_arrays(p, d)
    D = float(D)
    if D < 0:
        raise ValueError('D must be nonnegative (got %r)' % D)
    tol = get_limit('ba_tol', tol, section='oracle')
    if tol <= 0:
        raise ValueError('tol must be positive (got %r)' % tol)
    max_iterations = int(get_limit('ba_max_iterations', max_iterations, section='oracle'))

    if D >= d_max(p, d):
        return RdCurvePoint(D=D, R=0.0, converged=True, iterations=0, s=S_MAX)
    if D <= d_min(p, d):
        dist, rate, conv, it = _iterate(p, d, S_MIN, tol, max_iterations)
        return _report(RdCurvePoint(D=dist, R=rate, converged=conv, iterations=it, s=S_MIN))

    lo, hi = S_MIN, S_MAX
    for _ in range(BISECTION_STEPS):
        s = (lo + hi) / 2
        dist, rate, conv, it = _iterate(p, d, s, tol, max_iterations)
        if abs(dist - D) < tol:
            break
        if dist > D:
            hi = s
        else:
            lo = s
    logger.debug('Blahut-Arimoto at D=%g: s=%g R=%g after %d iterations' % (D, s, rate, it))
    return _report(RdCurvePoint(D=dist, R=rate, converged=conv, iterations=it, s=s))


def _report(point):
    if not point.converged:
        logger.warning('Blahut-Arimoto did not converge at s=%g after %d iterations' % (point.s, point.iterations))
    return point


def rd_curve(p, d, D_grid, tol=None, max_iterations=None):
    '''Blahut-Arimoto over a grid of distortions.

    Returns
    -------
    pandas.DataFrame
        columns 'D_target', 'D', 'R', 'converged', 'iterations', 's'
    '''
    rows = []
    for D in D_grid:
        pt = blahut_arimoto(p, d, float(D), tol, max_iterations)
        rows.append({'D_target': float(D), 'D': pt.D, 'R': pt.R, 'converged': pt.converged,
                     'iterations': pt.iterations, 's': pt.s})
    return pd.DataFrame(rows, columns=['D_target', 'D', 'R', 'converged', 'iterations', 's'])
