# ----------------------------------------------------------------------------
# Copyright (c) 2024--,  covpack development team.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file COPYING.txt, distributed with this software.
# ----------------------------------------------------------------------------

import docrep


# parameters shared by every function that sweeps the reproduction types
_SWEEP = '''arith : {'exact', 'log', 'auto'}, optional
    arithmetic policy; 'auto' is exact up to ``[limits] exact_max_length``
budget : int or None, optional
    joint-type enumeration budget; None reads ``[limits] enumeration_budget``
threads : int, optional
    worker threads for the sweep over reproduction types'''

ds = docrep.DocstringProcessor(**{'sweep.parameters': _SWEEP})
