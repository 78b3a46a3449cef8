# ----------------------------------------------------------------------------
# Copyright (c) 2024--,  covpack development team.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file COPYING.txt, distributed with this software.
# ----------------------------------------------------------------------------

from importlib import resources
from logging.config import fileConfig

__credits__ = "covpack development team"
__version__ = "2024.1.0"

from .type_lab import (Alphabet, RationalPmf, TypeVector, JointType, Permutation, LogProb,  # noqa: E402
                       EnumerationBudgetError)
from .distortion import AdditiveDistortion, JointTypeDistortion, hamming, check_duality  # noqa: E402
from .covering import simulate_covering, best_q, rate_exponent  # noqa: E402
from .packing import simulate_packing, bound_check, estimate_omega  # noqa: E402
from .oracle import blahut_arimoto, binary_hamming_rd  # noqa: E402
from .util import set_log_level  # noqa: E402


__all__ = ['Alphabet', 'RationalPmf', 'TypeVector', 'JointType', 'Permutation', 'LogProb',
           'EnumerationBudgetError', 'AdditiveDistortion', 'JointTypeDistortion', 'hamming',
           'check_duality', 'simulate_covering', 'best_q', 'rate_exponent', 'simulate_packing',
           'bound_check', 'estimate_omega', 'blahut_arimoto', 'binary_hamming_rd', 'set_log_level']


# setting False allows other logger to print log.
fileConfig(str(resources.files(__package__) / 'log.cfg'), disable_existing_loggers=False)
