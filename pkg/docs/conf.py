"""Sphinx configuration for the pysvetlichny documentation."""

import os
import sys

sys.path.insert(0, os.path.abspath(".."))

project = "pysvetlichny"
copyright = "2025, Holger Nahrstaedt"
author = "Holger Nahrstaedt"

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.intersphinx",
    "sphinx.ext.mathjax",
    "sphinx.ext.napoleon",
    "sphinx.ext.viewcode",
]

# docstrings are Google style throughout
napoleon_google_docstring = True
napoleon_numpy_docstring = False
napoleon_use_rtype = True
napoleon_attr_annotations = True

autodoc_default_options = {
    "members": True,
    "show-inheritance": True,
    "member-order": "bysource",
}
autodoc_typehints = "description"

exclude_patterns = ["_build"]

html_theme = "sphinx_rtd_theme"
html_theme_options = {"navigation_depth": 3}

intersphinx_mapping = {
    "python": ("https://docs.python.org/3", None),
    "numpy": ("https://numpy.org/doc/stable", None),
    "scipy": ("https://docs.scipy.org/doc/scipy", None),
    "click": ("https://click.palletsprojects.com/en/stable", None),
    "jsonschema": ("https://python-jsonschema.readthedocs.io/en/stable", None),
}
