# Configuration file for the Sphinx documentation builder.
#
# https://www.sphinx-doc.org/en/master/usage/configuration.html

import re

# -- Project information -----------------------------------------------------

project = 'tightcert'
copyright = '2026, tightcert developers'
author = 'tightcert developers'

# Version read from the package source without importing it.
with open('../tightcert/__init__.py', 'r') as f:
    version_match = re.search(
        r"__version__\s*=\s*['\"]([^'\"]+)['\"]", f.read())
    version = release = version_match.group(1) if version_match else 'unknown'

# -- General configuration ---------------------------------------------------

extensions = [
    "myst_parser",
    "sphinx.ext.autodoc",
    "sphinx.ext.napoleon",
    "sphinx.ext.viewcode",
]

autoclass_content = "init"

# Optional extras.
autodoc_mock_imports = ["skimage", "joblib"]

templates_path = ['_templates']
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']

# -- Options for HTML output -------------------------------------------------

html_theme = 'sphinx_rtd_theme'
