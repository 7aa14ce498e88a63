# Configuration file for the Sphinx documentation builder.

import os

on_rtd = os.environ.get('READTHEDOCS') == 'True'

import obstruction_forge

# -- Project information -----------------------------------------------------

project = 'obstruction_forge'
copyright = '2026, obstruction_forge developers'
author = 'obstruction_forge developers'

version = obstruction_forge.__version__
release = obstruction_forge.__version__

# -- General configuration ---------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.coverage',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
    'sphinx.ext.napoleon',
]

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'
language = None
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']
pygments_style = 'sphinx'
default_role = 'any'

# -- Options for HTML output -------------------------------------------------

if on_rtd:
    html_theme = 'default'
else:
    html_theme = 'alabaster'

html_static_path = ['_static']
htmlhelp_basename = 'obstruction_forgedoc'

# -- Options for other output ------------------------------------------------

latex_documents = [
    (master_doc, 'obstruction_forge.tex', 'obstruction_forge Documentation',
     author, 'manual'),
]

man_pages = [
    (master_doc, 'obstruction-forge', 'obstruction_forge Documentation',
     [author], 1)
]

texinfo_documents = [
    (master_doc, 'obstruction_forge', 'obstruction_forge Documentation',
     author, 'obstruction_forge',
     'Obstruction checks for branched covers with rotation domains.',
     'Miscellaneous'),
]
