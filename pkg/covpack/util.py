'''
utilities (:mod:`covpack.util`)
===============================

.. currentmodule:: covpack.util

Functions
^^^^^^^^^
.. autosummary::
   :toctree: generated

   get_config_file
   get_config_value
   set_config_value
   get_config_sections
   get_limit
   set_log_level
   get_file_md5
   parse_rational
   format_rational
   substream
   block_seeds
   wilson_interval
   parallel_map
'''

# ----------------------------------------------------------------------------
# Copyright (c) 2024--,  covpack development team.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file COPYING.txt, distributed with this software.
# ----------------------------------------------------------------------------

import os
import hashlib
import configparser
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from logging import getLogger
from numbers import Rational

import numpy as np
from statsmodels.stats.proportion import proportion_confint


logger = getLogger(__name__)


# fallback values when the config file lacks a key
_LIMIT_DEFAULTS = {
    ('limits', 'enumeration_budget'): 1000000,
    ('limits', 'class_enumeration_limit'): 100000,
    ('limits', 'exact_max_length'): 64,
    ('limits', 'exact_power_limit'): 4096,
    ('limits', 'literal_codebook_limit'): 4096,
    ('simulation', 'block_size'): 1000,
    ('oracle', 'ba_max_iterations'): 10000,
    ('oracle', 'ba_tol'): 1e-10,
}


def get_file_md5(f, chunk_size=65536):
    '''md5 hex digest of a file, read in binary chunks.

    Used to stamp experiment manifests with the exact config they ran.

    Parameters
    ----------
    f : str or None
        the file path; None gives None
    chunk_size : int, optional
        bytes read per step

    Returns
    -------
    str or None
    '''
    if f is None:
        return None
    digest = hashlib.md5()
    with open(f, 'rb') as fl:
        while chunk := fl.read(chunk_size):
            digest.update(chunk)
    logger.debug('md5 of %s is %s' % (f, digest.hexdigest()))
    return digest.hexdigest()


def get_config_file():
    '''Path of the covpack config file.

    ``COVPACK_CONFIG_FILE`` in the environment wins over the
    ``covpack.config`` bundled with the package.

    Returns
    -------
    str
    '''
    path = os.environ.get('COVPACK_CONFIG_FILE')
    if path:
        logger.debug('config file %s taken from COVPACK_CONFIG_FILE' % path)
        return path
    return str(resources.files(__package__) / 'covpack.config')


def _read_config(config_file_name):
    config = configparser.ConfigParser()
    if not config.read(config_file_name):
        logger.debug('no config file at %s' % config_file_name)
    return config


@lru_cache(maxsize=16)
def _cached_config(config_file_name, mtime):
    # keyed on the modification time so edits made outside covpack are picked up
    return _read_config(config_file_name)


def _load_config(config_file_name):
    '''Parsed config for reading; shared between calls, do not modify.'''
    if config_file_name is None:
        config_file_name = get_config_file()
    try:
        mtime = os.stat(config_file_name).st_mtime_ns
    except OSError:
        mtime = None
    return _cached_config(config_file_name, mtime), config_file_name


def set_config_value(key, value, section='DEFAULT', config_file_name=None):
    '''Store ``key = value`` under ``section``, creating file and section as needed.

    Parameters
    ----------
    key : str
    value : str
    section : str, optional
    config_file_name : str or None, optional
        None writes to :func:`get_config_file`
    '''
    if config_file_name is None:
        config_file_name = get_config_file()
    config = _read_config(config_file_name)
    if section != config.default_section and not config.has_section(section):
        config.add_section(section)
    config.set(section, key, str(value))
    with open(config_file_name, 'w') as fl:
        config.write(fl)
    _cached_config.cache_clear()
    logger.debug('set [%s] %s = %s in %s' % (section, key, value, config_file_name))


def get_config_sections(config_file_name=None):
    '''Names of the sections in the config file (DEFAULT excluded).'''
    config, _ = _load_config(config_file_name)
    return config.sections()


def get_config_value(key, fallback=None, section='DEFAULT', config_file_name=None):
    '''Raw string value of ``key`` in ``section``.

    Parameters
    ----------
    key : str
    fallback : optional
        returned when the file, the section or the key is missing
    section : str, optional
    config_file_name : str or None, optional
        None reads :func:`get_config_file`

    Returns
    -------
    str or the fallback
    '''
    config, _ = _load_config(config_file_name)
    return config.get(section, key, fallback=fallback)


def get_limit(key, value=None, section='limits'):
    '''Resolve a numeric knob from an explicit value or the config file.

    Parameters
    ----------
    key : str
        the key name, e.g. ``'enumeration_budget'``
    value : int, float or None, optional
        explicit value; returned unchanged when not None
    section : str, optional
        the config section holding the key

    Returns
    -------
    int or float
    '''
    if value is not None:
        return value
    default = _LIMIT_DEFAULTS[(section, key)]
    raw = get_config_value(key, fallback=None, section=section)
    if raw is None:
        return default
    return type(default)(float(raw)) if isinstance(default, int) else float(raw)


def set_log_level(level):
    '''Set the level of the ``covpack`` logger.

    Parameters
    ----------
    level : int or str
        a :mod:`logging` level number (10 debug, 20 info, ...) or name
        ('DEBUG', 'INFO', ...)
    '''
    getLogger('covpack').setLevel(level)


def parse_rational(x):
    '''Convert a "num/den" string, an int or a Rational to an exact Fraction.

    Floats are converted through their shortest decimal repr, so ``0.1``
    becomes 1/10 rather than the binary approximation.

    Examples
    --------
    >>> parse_rational('1/3')
    Fraction(1, 3)
    >>> parse_rational(0.25)
    Fraction(1, 4)
    >>> parse_rational(' 2 ')
    Fraction(2, 1)
    '''
    if isinstance(x, Rational):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except ValueError:
            raise ValueError('cannot parse rational from %r' % x)
    if isinstance(x, (np.integer,)):
        return Fraction(int(x))
    if isinstance(x, np.floating):
        return Fraction(repr(float(x)))
    raise ValueError('cannot parse rational from %r' % (x,))


def format_rational(x):
    '''Serialize a rational as a "num/den" string.

    Examples
    --------
    >>> format_rational(Fraction(5, 6))
    '5/6'
    >>> format_rational(1)
    '1/1'
    '''
    x = Fraction(x)
    return '%d/%d' % (x.numerator, x.denominator)


def _label_to_int(label):
    return int(hashlib.md5(str(label).encode('utf-8')).hexdigest()[:16], 16)


def substream(seed, label, *coords):
    '''Derive a deterministic random generator.

    The stream depends only on the master seed, the purpose label and
    the integer grid coordinates, so grid cells can run in any order and
    on any number of threads.

    Parameters
    ----------
    seed : int
        the master seed
    label : str
        purpose label (e.g. ``'pack'``)
    coords : int
        grid coordinates / trial indices

    Returns
    -------
    numpy.random.Generator
    '''
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, _label_to_int(label)] + [int(c) for c in coords]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def block_seeds(random_seed, trials, block_size=None):
    '''Split ``trials`` into blocks, each with its own child seed.

    Parameters
    ----------
    random_seed : int, np.random.Generator instance or None, optional, default=None
        set the random number generator seed for the trials
        If int, random_seed is the seed used by the random number generator;
        If Generator instance, random_seed is set to the random number generator;
        If None, then fresh, unpredictable entropy will be pulled from the OS
    trials : int
        total number of trials
    block_size : int or None, optional
        trials per block; None to read ``[simulation] block_size``

    Returns
    -------
    list of (int, numpy.random.Generator)
        the number of trials in each block and its generator
    '''
    block_size = int(get_limit('block_size', block_size, section='simulation'))
    rng = np.random.default_rng(random_seed)
    sizes = [block_size] * (trials // block_size)
    if trials % block_size:
        sizes.append(trials % block_size)
    seeds = rng.integers(0, 2 ** 63 - 1, size=len(sizes))
    return [(s, np.random.default_rng(int(cseed))) for s, cseed in zip(sizes, seeds)]


def wilson_interval(count, nobs, alpha=0.05):
    '''Wilson score interval for a binomial proportion.

    Parameters
    ----------
    count : int
        number of successes
    nobs : int
        number of trials
    alpha : float, optional
        1 - confidence level

    Returns
    -------
    tuple of (float, float)
        the lower and upper edges
    '''
    if nobs < 1:
        raise ValueError('Wilson interval needs at least one trial (got %d)' % nobs)
    low, high = proportion_confint(count, nobs, alpha=alpha, method='wilson')
    return float(max(low, 0.0)), float(min(high, 1.0))


def parallel_map(func, items, threads=1):
    '''Map ``func`` over ``items``, keeping the input order.

    Parameters
    ----------
    func : callable
    items : iterable
    threads : int, optional
        worker threads; 1 runs in the calling thread

    Returns
    -------
    list
    '''
    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [func(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))

