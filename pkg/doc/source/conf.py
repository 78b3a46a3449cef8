# -*- coding: utf-8 -*-
#
# covpack documentation build configuration file.
#
# This file is execfile()d with the current directory set to its
# containing dir.

import datetime

import sphinx_bootstrap_theme

import covpack


# -- General configuration ------------------------------------------------

needs_sphinx = '1.5'

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.mathjax',
    'sphinx.ext.napoleon',
    'sphinx.ext.coverage',
    'sphinx.ext.doctest',
    'sphinx.ext.autosummary',
    'sphinx.ext.intersphinx',
]

autosummary_generate = True

source_suffix = '.rst'

master_doc = 'index'

project = 'covpack'
now = datetime.datetime.now()
copyright = '2024-{}, covpack development team'.format(now.year)

version = covpack.__version__
release = covpack.__version__

exclude_patterns = ['_build']

pygments_style = 'sphinx'

# numpy style docstrings only
napoleon_google_docstring = False
napoleon_numpy_docstring = True
napoleon_include_private_with_doc = False
napoleon_include_special_with_doc = True
napoleon_use_admonition_for_examples = False
napoleon_use_admonition_for_notes = True
napoleon_use_admonition_for_references = False
napoleon_use_ivar = True
napoleon_use_param = True
napoleon_use_keyword = True
napoleon_use_rtype = False


# -- Options for HTML output ----------------------------------------------

html_theme = 'bootstrap'
html_theme_path = sphinx_bootstrap_theme.get_html_theme_path()
html_theme_options = {
    'nosidebar': True,
    'navbar_title': 'covpack',
    'navbar_sidebarrel': False,
    'bootswatch_theme': 'united',
    'source_link_position': False,
    'bootstrap_version': "3"
}

htmlhelp_basename = 'covpackdoc'

latex_documents = [
    ('index', 'covpack.tex', 'covpack Documentation',
     'covpack development team', 'manual'),
]

man_pages = [
    ('index', 'covpack', 'covpack Documentation',
     ['covpack development team'], 1)
]

intersphinx_mapping = {
    'python': ('https://docs.python.org/3', None),
    'numpy': ('https://numpy.org/doc/stable/', None),
    'scipy': ('https://docs.scipy.org/doc/scipy/', None),
    'pandas': ('https://pandas.pydata.org/docs/', None),
}
