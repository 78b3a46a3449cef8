#!/usr/bin/env python

# ----------------------------------------------------------------------------
# Copyright (c) 2024--,  covpack development team.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file COPYING.txt, distributed with this software.
# ----------------------------------------------------------------------------

import re
import ast
from setuptools import find_packages, setup


# version parsing from __init__ pulled from Flask's setup.py
# https://github.com/mitsuhiko/flask/blob/master/setup.py
_version_re = re.compile(r'__version__\s+=\s+(.*)')

with open('covpack/__init__.py', 'rb') as f:
    hit = _version_re.search(f.read().decode('utf-8')).group(1)
    version = str(ast.literal_eval(hit))

classifiers = [
    'Development Status :: 3 - Alpha',
    'License :: OSI Approved :: BSD License',
    'Environment :: Console',
    'Topic :: Scientific/Engineering',
    'Topic :: Scientific/Engineering :: Mathematics',
    'Programming Language :: Python',
    'Programming Language :: Python :: 3',
    'Programming Language :: Python :: 3.9',
    'Programming Language :: Python :: 3.10',
    'Programming Language :: Python :: 3.11',
    'Operating System :: Unix',
    'Operating System :: POSIX',
    'Operating System :: MacOS :: MacOS X',
    'Operating System :: Microsoft :: Windows']


description = 'covpack: exact and simulated duality of random covering and packing codes over type classes'

with open('README.md') as f:
    long_description = f.read()

keywords = 'information theory rate distortion covering packing type classes'

setup(name='covpack',
      version=version,
      license='BSD',
      description=description,
      long_description=long_description,
      long_description_content_type='text/markdown',
      keywords=keywords,
      classifiers=classifiers,
      author="covpack development team",
      maintainer="covpack development team",
      python_requires='>=3.9',
      packages=find_packages(),
      package_data={'covpack': ['log.cfg', 'covpack.config', 'tests/data/*.config']},
      entry_points={'console_scripts': ['covpack = covpack.cli_experiments:main']},
      install_requires=[
          'numpy >= 1.20',
          'scipy',
          'pandas >= 1.5',
          'statsmodels',
          'docrep'],
      extras_require={'test': ["pytest", "flake8"],
                      'coverage': ["pytest-cov"],
                      'doc': ["Sphinx >= 1.4", "sphinx_bootstrap_theme"]
                      })
