'''
experiment runner (:mod:`covpack.cli_experiments`)
==================================================

.. currentmodule:: covpack.cli_experiments

Config-driven grids of duality checks, exponent sweeps, covering and
packing simulations and the source-channel separation demo. Every
command writes CSV files (a ``# schema=<name>/<version>`` line, then the
header row) and a JSON manifest into the output directory.

Experiment configs are INI files::

    [experiment]
    x_alphabet = 0,1
    y_alphabet = 0,1
    pmf = 1/2,1/2
    distortion = hamming
    d_grid = 0,1/4,1/2
    lengths = 2,4,6
    rates = 0,1/10,1/4
    trials = 10000
    seed = 42
    arith = auto
    output_dir = results

    [channel]
    kind = bsc
    crossover = 1/20

Rationals are "num/den" strings; lists are comma separated; matrices
use ";" between rows.

Classes
^^^^^^^
.. autosummary::
   :toctree: generated

   ExperimentConfig
   RunManifest
   ConfigError

Functions
^^^^^^^^^
.. autosummary::
   :toctree: generated

   read_config
   cmd_duality
   cmd_exponent
   cmd_cover
   cmd_pack
   cmd_separation_demo
   main
'''

# ----------------------------------------------------------------------------
# Copyright (c) 2024--,  covpack development team.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file COPYING.txt, distributed with this software.
# ----------------------------------------------------------------------------

import os
import sys
import json
import time
import argparse
import configparser
from dataclasses import dataclass, field
from fractions import Fraction
from logging import getLogger

import pandas as pd

from .type_lab import Alphabet, RationalPmf, EnumerationBudgetError, enumerate_types, ARITH_POLICIES
from .distortion import AdditiveDistortion, hamming, worst_letter, check_duality
from .covering import CoveringConfig, simulate_covering, best_q, exponent_table, rate_exponent
from .packing import (ComposedChannel, bsc_channel, dmc_channel, identity_channel, ball_channel,
                      identity_wrapper, repetition_wrapper, estimate_omega, simulate_packing, bound_check)
from .oracle import blahut_arimoto
from .util import (parse_rational, format_rational, get_file_md5, substream, parallel_map, set_log_level)


logger = getLogger(__name__)

EXIT_OK = 0
EXIT_INVARIANT = 2
EXIT_CONFIG = 3
EXIT_BUDGET = 4

SCHEMA_VERSION = 1

# allowed keys and defaults of every config section
_SECTIONS = {
    'experiment': {'x_alphabet': '0,1', 'y_alphabet': None, 'pmf': None, 'distortion': 'hamming',
                   'matrix': None, 'd_grid': '0', 'lengths': None, 'rates': '0', 'trials': '1000',
                   'seed': '0', 'arith': 'auto', 'output_dir': 'results'},
    'channel': {'kind': 'identity', 'crossover': '0', 'matrix': None, 'd_inner': None},
    'duality': {'probes': '4'},
    'cover': {'trials': None},
    'pack': {'trials': None, 'omega_trials': None},
    'separation': {'wrapper': 'identity', 'repetition': '3', 'omega_threshold': '1/100',
                   'overshoot': '3/10', 'trials': None, 'omega_trials': None},
}


class ConfigError(ValueError):
    '''Raised for malformed or unknown experiment config entries.'''


@dataclass
class ExperimentConfig:
    '''A parsed experiment config.

    Attributes
    ----------
    x_alphabet, y_alphabet : Alphabet
    pmf : RationalPmf
        the source distribution on x_alphabet
    distortion : Distortion
    distortion_kind : str
        'hamming', 'matrix' or 'worst_letter'
    d_grid : list of Fraction
    lengths : list of int
        block lengths, multiples of ``pmf.n0``
    rates : list of Fraction
    trials : int
    seed : int
    arith : str
    output_dir : str
    sections : dict of dict
        raw values of every section, defaults filled in
    path : str or None
    '''
    x_alphabet: Alphabet
    y_alphabet: Alphabet
    pmf: RationalPmf
    distortion: object
    distortion_kind: str
    d_grid: list
    lengths: list
    rates: list
    trials: int
    seed: int
    arith: str
    output_dir: str
    sections: dict = field(default_factory=dict)
    path: str = None

    def section_int(self, section, key, default=None):
        value = self.sections[section][key]
        if value is None:
            return default
        return _to_int(value, '%s.%s' % (section, key))


def _to_int(value, name):
    try:
        return int(value)
    except ValueError:
        raise ConfigError('%s must be an integer (got %r)' % (name, value))


def _rationals(value, name):
    try:
        return [parse_rational(x) for x in value.split(',') if x.strip()]
    except (ValueError, ZeroDivisionError):
        raise ConfigError('%s must be a comma separated list of rationals (got %r)' % (name, value))


def _matrix(value, name):
    rows = [r for r in value.split(';') if r.strip()]
    return [_rationals(r, name) for r in rows]


def read_config(path):
    '''Read an experiment config file.

    Parameters
    ----------
    path : str
        the INI file

    Returns
    -------
    ExperimentConfig

    Raises
    ------
    ConfigError
        if the file is missing, a section or key is unknown, or a value
        cannot be parsed
    '''
    if not os.path.exists(path):
        raise ConfigError('config file %s not found' % path)
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path)
    except configparser.Error as err:
        raise ConfigError('cannot parse config file %s: %s' % (path, err))
    if parser.defaults():
        raise ConfigError('DEFAULT section is not supported (keys %s)' % list(parser.defaults()))
    sections = {}
    for name, keys in _SECTIONS.items():
        sections[name] = dict(keys)
    for name in parser.sections():
        if name not in _SECTIONS:
            raise ConfigError('unknown section [%s] in %s' % (name, path))
        for key, value in parser[name].items():
            if key not in _SECTIONS[name]:
                raise ConfigError('unknown key %r in section [%s] of %s' % (key, name, path))
            sections[name][key] = value.strip()
    exp = sections['experiment']

    try:
        x_alphabet = Alphabet.from_labels(exp['x_alphabet'])
        y_alphabet = Alphabet.from_labels(exp['y_alphabet'] or exp['x_alphabet'])
    except ValueError as err:
        raise ConfigError('bad alphabet: %s' % err)
    if exp['pmf'] is None:
        raise ConfigError('experiment.pmf is required')
    try:
        pmf = RationalPmf(tuple(_rationals(exp['pmf'], 'experiment.pmf')), x_alphabet)
    except ConfigError:
        raise
    except ValueError as err:
        raise ConfigError('bad pmf: %s' % err)

    kind = exp['distortion']
    try:
        if kind == 'hamming':
            d = hamming(x_alphabet.size, y_alphabet.size)
        elif kind in ('matrix', 'worst_letter'):
            if exp['matrix'] is None:
                raise ConfigError('experiment.matrix is required for distortion = %s' % kind)
            m = _matrix(exp['matrix'], 'experiment.matrix')
            d = AdditiveDistortion(m) if kind == 'matrix' else worst_letter(m)
        else:
            raise ConfigError('unknown distortion %r. Options are hamming, matrix, worst_letter' % kind)
    except ConfigError:
        raise
    except ValueError as err:
        raise ConfigError('bad distortion matrix: %s' % err)
    if (d.nx, d.ny) != (x_alphabet.size, y_alphabet.size):
        raise ConfigError('distortion is %dx%d but the alphabets have %d and %d symbols'
                          % (d.nx, d.ny, x_alphabet.size, y_alphabet.size))

    d_grid = _rationals(exp['d_grid'], 'experiment.d_grid')
    if any(D < 0 for D in d_grid):
        raise ConfigError('experiment.d_grid must be nonnegative (got %s)' % exp['d_grid'])
    if exp['lengths'] is None:
        lengths = [pmf.n0]
    else:
        lengths = [_to_int(x, 'experiment.lengths') for x in exp['lengths'].split(',') if x.strip()]
    bad = [n for n in lengths if n < 1 or n % pmf.n0]
    if bad:
        raise ConfigError('lengths %s are not positive multiples of n0=%d' % (bad, pmf.n0))
    rates = _rationals(exp['rates'], 'experiment.rates')
    if any(R < 0 for R in rates):
        raise ConfigError('experiment.rates must be nonnegative (got %s)' % exp['rates'])
    if exp['arith'] not in ARITH_POLICIES:
        raise ConfigError('unknown arith %r. Options are %s' % (exp['arith'], ARITH_POLICIES))
    trials = _to_int(exp['trials'], 'experiment.trials')
    if trials < 1:
        raise ConfigError('experiment.trials must be positive (got %d)' % trials)
    return ExperimentConfig(x_alphabet=x_alphabet, y_alphabet=y_alphabet, pmf=pmf, distortion=d,
                            distortion_kind=kind, d_grid=d_grid, lengths=lengths, rates=rates,
                            trials=trials, seed=_to_int(exp['seed'], 'experiment.seed'),
                            arith=exp['arith'], output_dir=exp['output_dir'], sections=sections, path=path)


@dataclass
class RunManifest:
    '''What a command ran and wrote.'''
    command: str
    config_md5: str
    seed: int
    version: str
    timings: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    exit_code: int = 0

    def write(self, path):
        with open(path, 'w', newline='\n') as f:
            json.dump(self.__dict__, f, indent=2, sort_keys=True)
            f.write('\n')


def _write_csv(df, out_dir, name, schema=None):
    path = os.path.join(out_dir, '%s.csv' % name)
    with open(path, 'w', newline='\n', encoding='utf-8') as f:
        f.write('# schema=%s/%d\n' % (schema or name, SCHEMA_VERSION))
        df.to_csv(f, index=False, lineterminator='\n', float_format='%.10g')
    logger.debug('wrote %d rows to %s' % (len(df), path))
    return path


def _frac(x):
    if isinstance(x, Fraction):
        return format_rational(x)
    return ''


def _counts(t):
    return ' '.join(str(c) for c in t.counts)


def cmd_duality(cfg, out_dir, threads=1):
    '''Check the three-way duality on every (n, q, D) of the config.

    Returns
    -------
    tuple of (int, list of str)
        exit code (2 when any row is unequal) and written files
    '''
    d = cfg.distortion
    probes = cfg.section_int('duality', 'probes', 4)
    cells = []
    for i, n in enumerate(cfg.lengths):
        p = cfg.pmf.type_at(n)
        try:
            qs = enumerate_types(cfg.y_alphabet.size, n)
        except EnumerationBudgetError as err:
            logger.warning('skipping n=%d: %s' % (n, err))
            cells.extend((i, None, j, p, None, D) for j, D in enumerate(cfg.d_grid))
            continue
        for k, q in enumerate(qs):
            for j, D in enumerate(cfg.d_grid):
                cells.append((i, k, j, p, q, D))

    def run(cell):
        i, k, j, p, q, D = cell
        row = {'n': p.n, 'p': _counts(p), 'q': _counts(q) if q is not None else '', 'D': format_rational(D),
               'lhs': '', 'rhs': '', 'both_random': '', 'equal': '', 'status': 'skipped'}
        if q is None:
            return row
        try:
            rep = check_duality(p, q, D, d, probes, substream(cfg.seed, 'duality', i, k, j))
        except EnumerationBudgetError as err:
            logger.warning('skipping p=%s q=%s D=%s: %s' % (p, q, D, err))
            return row
        row.update(lhs=format_rational(rep.lhs), rhs=format_rational(rep.rhs),
                   both_random=format_rational(rep.both_random), equal=rep.equal, status='ok')
        return row

    rows = parallel_map(run, cells, threads)
    df = pd.DataFrame(rows, columns=['n', 'p', 'q', 'D', 'lhs', 'rhs', 'both_random', 'equal', 'status'])
    path = _write_csv(df, out_dir, 'duality')
    unequal = sum(1 for r in rows if r['equal'] is False)
    logger.info('duality: %d instances, %d skipped, %d unequal'
                % (len(df), int((df['status'] == 'skipped').sum()), unequal))
    return (EXIT_INVARIANT if unequal else EXIT_OK), [path]


def cmd_exponent(cfg, out_dir, threads=1):
    '''Rate exponent along the block lengths for every D, with the Blahut-Arimoto reference.

    Writes ``exponent.csv`` and one two-column plot file per D.
    '''
    d = cfg.distortion
    tables = []
    outputs = []
    for j, D in enumerate(cfg.d_grid):
        tab = exponent_table(cfg.pmf, D, d, cfg.lengths, cfg.arith, threads=threads)
        if d.is_additive:
            ref = blahut_arimoto(cfg.pmf, d, float(D)).R
        else:
            ref = float('nan')
        tab.insert(0, 'D', format_rational(D))
        tab['rd_reference'] = ref
        tab['gap'] = tab['exponent'] - ref
        tables.append(tab)
        outputs.append(_write_csv(tab[['n', 'exponent']], out_dir, 'exponent_plot_%d' % j, 'exponent_plot'))
    df = pd.concat(tables, ignore_index=True)
    outputs.insert(0, _write_csv(df, out_dir, 'exponent'))
    return EXIT_OK, outputs


def cmd_cover(cfg, out_dir, threads=1):
    '''Covering simulations over the (n, D, R) grid using the best reproduction type.'''
    d = cfg.distortion
    trials = cfg.section_int('cover', 'trials', cfg.trials)
    cells = [(i, j, k, n, D, R) for i, n in enumerate(cfg.lengths)
             for j, D in enumerate(cfg.d_grid) for k, R in enumerate(cfg.rates)]
    qs = {}
    for i, n in enumerate(cfg.lengths):
        for D in cfg.d_grid:
            qs[(n, D)] = best_q(cfg.pmf.type_at(n), D, d, arith=cfg.arith)[0]

    def run(cell):
        i, j, k, n, D, R = cell
        ccfg = CoveringConfig(p=cfg.pmf.type_at(n), q=qs[(n, D)], D=D, rate=R, d=d, trials=trials)
        res = simulate_covering(ccfg, substream(cfg.seed, 'cover', i, j, k), arith=cfg.arith)
        return {'n': n, 'D': format_rational(D), 'R': format_rational(R), 'codebook_size': str(res.codebook_size),
                'q': _counts(res.q), 'analytic': float(res.analytic), 'analytic_exact': _frac(res.analytic),
                'failures': res.failure.count, 'trials': res.failure.trials, 'failure_rate': res.failure.estimate,
                'low': res.failure.low, 'high': res.failure.high, 'within': res.within_interval, 'mode': res.mode,
                'calibrated': res.calibrated}

    df = pd.DataFrame(parallel_map(run, cells, threads))
    path = _write_csv(df, out_dir, 'cover')
    if len(df):
        # collapsed cells draw from the analytic law and cannot test it
        literal = df[df['calibrated']]
        logger.info('cover: analytic value within the Wilson interval on %d of %d literal cells (%d collapsed)'
                    % (int(literal['within'].sum()), len(literal), len(df) - len(literal)))
    return EXIT_OK, [path]


def _make_channel(cfg, D):
    ch = cfg.sections['channel']
    kind = ch['kind']
    try:
        if kind == 'identity':
            return identity_channel(cfg.x_alphabet.size)
        if kind == 'bsc':
            return bsc_channel(parse_rational(ch['crossover']))
        if kind == 'dmc':
            if ch['matrix'] is None:
                raise ConfigError('channel.matrix is required for kind = dmc')
            return dmc_channel([[float(v) for v in row] for row in _matrix(ch['matrix'], 'channel.matrix')])
        if kind == 'ball':
            D_inner = D if ch['d_inner'] is None else parse_rational(ch['d_inner'])
            if D_inner > D:
                logger.warning('ball radius %s exceeds the threshold %s' % (D_inner, D))
            return ball_channel(cfg.distortion, D_inner)
    except ConfigError:
        raise
    except ValueError as err:
        raise ConfigError('bad channel: %s' % err)
    raise ConfigError('unknown channel kind %r. Options are identity, bsc, dmc, ball' % kind)


def _pack_cells(cfg, channel_for, label, trials, omega_trials, threads, rates_for=None):
    # omega and A per (n, D), then one packing run per rate
    d = cfg.distortion
    rows = []
    for i, n in enumerate(cfg.lengths):
        p = cfg.pmf.type_at(n)
        for j, D in enumerate(cfg.d_grid):
            ch = channel_for(D)
            A = best_q(p, D, d, arith=cfg.arith)[1]
            omega = estimate_omega(ch, p, D, d, omega_trials, substream(cfg.seed, label + '-omega', i, j))
            rates = cfg.rates if rates_for is None else rates_for(p, D, omega)
            if rates is None:
                rows.append({'n': n, 'D': format_rational(D), 'R': '', 'channel': repr(ch),
                             'omega': omega.estimate, 'omega_upper': omega.upper, 'status': 'aborted'})
                continue

            def run(item, i=i, j=j, p=p, D=D, ch=ch, A=A, omega=omega):
                k, (R, tag) = item
                res = simulate_packing(ch, p, D, d, R, trials, substream(cfg.seed, label, i, j, k),
                                       arith=cfg.arith, A=A, omega=omega)
                chk = bound_check(res, A, omega)
                row = {'n': n, 'D': format_rational(D), 'R': format_rational(R), 'channel': repr(ch),
                       'codebook_size': str(res.codebook_size), 'omega': omega.estimate,
                       'omega_upper': omega.upper, 'A': float(A), 'correct_rate': res.correct_rate,
                       'bound': chk.bound, 'slack': chk.slack, 'margin': chk.margin, 'passed': chk.passed,
                       'mode': res.mode, 'status': 'ok'}
                row.update(res.counts)
                if tag:
                    row['label'] = tag
                return row
            rows.extend(parallel_map(run, list(enumerate(rates)), threads))
    return rows


def cmd_pack(cfg, out_dir, threads=1):
    '''Packing simulations with bound checks over the (n, D, R) grid.

    Returns exit code 2 when any cell fails its bound check.
    '''
    trials = cfg.section_int('pack', 'trials', cfg.trials)
    omega_trials = cfg.section_int('pack', 'omega_trials', trials)
    rates = [(R, '') for R in cfg.rates]
    rows = _pack_cells(cfg, lambda D: _make_channel(cfg, D), 'pack', trials, omega_trials, threads,
                       rates_for=lambda p, D, omega: rates)
    df = pd.DataFrame(rows, columns=['n', 'D', 'R', 'channel', 'codebook_size', 'omega', 'omega_upper', 'A',
                                     'correct', 'wrong_unique', 'none', 'ambiguous', 'correct_rate',
                                     'bound', 'slack', 'margin', 'passed', 'mode', 'status'])
    path = _write_csv(df, out_dir, 'pack')
    failed = sum(1 for r in rows if r.get('passed') is False)
    logger.info('pack: %d cells, %d bound failures' % (len(df), failed))
    return (EXIT_INVARIANT if failed else EXIT_OK), [path]


def cmd_separation_demo(cfg, out_dir, threads=1):
    '''Packing over encoder * channel * decoder at the configured rates and past the exponent.

    The wrapped channel must keep omega below ``separation.omega_threshold``;
    otherwise the cell is reported as aborted and the exit code is 2.
    '''
    sep = cfg.sections['separation']
    if cfg.sections['channel']['kind'] == 'ball':
        raise ConfigError('the separation demo needs a noisy channel kind (identity, bsc or dmc)')
    if sep['wrapper'] == 'identity':
        wrapper = identity_wrapper()
    elif sep['wrapper'] == 'repetition':
        wrapper = repetition_wrapper(cfg.section_int('separation', 'repetition'))
    else:
        raise ConfigError('unknown wrapper %r. Options are identity, repetition' % sep['wrapper'])
    threshold = float(_rationals(sep['omega_threshold'], 'separation.omega_threshold')[0])
    overshoot = _rationals(sep['overshoot'], 'separation.overshoot')[0]
    trials = cfg.section_int('separation', 'trials', cfg.trials)
    omega_trials = cfg.section_int('separation', 'omega_trials', trials)
    inner = _make_channel(cfg, None)
    composed = ComposedChannel(wrapper, inner)

    def rates_for(p, D, omega):
        if omega.upper > threshold:
            logger.warning('separation aborted at n=%d D=%s: omega upper edge %.4g above %.4g with %r'
                           % (p.n, D, omega.upper, threshold, composed))
            return None
        exponent = rate_exponent(p, D, cfg.distortion, arith=cfg.arith)
        rates = [(R, 'configured') for R in cfg.rates]
        if exponent != float('inf'):
            rates.append((parse_rational(round(exponent, 6)) + overshoot, 'overshoot'))
        return rates

    rows = _pack_cells(cfg, lambda D: composed, 'separation', trials, omega_trials, threads, rates_for)
    df = pd.DataFrame(rows, columns=['n', 'D', 'R', 'label', 'channel', 'codebook_size', 'omega', 'omega_upper',
                                     'A', 'correct', 'wrong_unique', 'none', 'ambiguous', 'correct_rate',
                                     'bound', 'passed', 'mode', 'status'])
    path = _write_csv(df, out_dir, 'separation')
    aborted = int((df['status'] == 'aborted').sum())
    return (EXIT_INVARIANT if aborted else EXIT_OK), [path]


COMMANDS = {
    'duality': cmd_duality,
    'exponent': cmd_exponent,
    'cover': cmd_cover,
    'pack': cmd_pack,
    'separation': cmd_separation_demo,
}


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', required=True, help='experiment config file (INI)')
    common.add_argument('--seed', type=int, default=None, help='master seed (overrides the config)')
    common.add_argument('--out', default=None, help='output directory (overrides the config)')
    common.add_argument('--threads', type=int, default=1, help='worker threads')
    common.add_argument('--arith', choices=ARITH_POLICIES, default=None, help='arithmetic policy')
    common.add_argument('--log-level', default='INFO', help='logging level of covpack')
    parser = argparse.ArgumentParser(prog='covpack', description='covering / packing duality experiments')
    sub = parser.add_subparsers(dest='command', required=True)
    for name, func in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=func.__doc__.splitlines()[0])
    return parser


def main(argv=None):
    '''Run one experiment command; returns the process exit code.'''
    from . import __version__

    args = _parser().parse_args(argv)
    set_log_level(args.log_level.upper())
    try:
        cfg = read_config(args.config)
    except ConfigError as err:
        logger.error('config error: %s' % err)
        return EXIT_CONFIG
    if args.seed is not None:
        cfg.seed = args.seed
    if args.arith is not None:
        cfg.arith = args.arith
    out_dir = args.out or cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)

    manifest = RunManifest(command=args.command, config_md5=get_file_md5(args.config), seed=cfg.seed,
                           version=__version__)
    start = time.perf_counter()
    try:
        code, outputs = COMMANDS[args.command](cfg, out_dir, threads=args.threads)
    except ConfigError as err:
        logger.error('config error: %s' % err)
        return EXIT_CONFIG
    except EnumerationBudgetError as err:
        logger.error('budget exceeded: %s' % err)
        return EXIT_BUDGET
    manifest.timings[args.command] = round(time.perf_counter() - start, 3)
    manifest.outputs = [os.path.basename(p) for p in outputs]
    manifest.exit_code = code
    manifest.write(os.path.join(out_dir, '%s_manifest.json' % args.command))
    logger.info('%s finished with exit code %d; outputs in %s' % (args.command, code, out_dir))
    return code


if __name__ == '__main__':
    sys.exit(main())
