#!/usr/bin/env python3
# Sphinx configuration for the CombConductor manual.
# Build with: sphinx-build -b html docs docs/_build
import os
import sys

# Autodoc imports the packages from the repository root
sys.path.insert(0, os.path.abspath(".."))

project     = "CombConductor"
author      = "CombConductor authors"
copyright   = "2026, %s" % author
version     = "v0.1.1"
release     = version

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.coverage",
    "sphinx.ext.napoleon",
    "sphinx.ext.mathjax"
]

# Markdown pages sit next to the reStructuredText index
source_suffix   = [".rst", ".md"]
source_parsers  = {".md": "recommonmark.parser.CommonMarkParser"}
master_doc      = "index"
templates_path  = ["_templates"]
exclude_patterns = ["_build"]

# Physics modules import numpy and scipy at module level
autodoc_mock_imports = ["numpy", "scipy", "configobj", "validate", "jsonschema"]
autodoc_member_order = "bysource"
napoleon_google_docstring = False

pygments_style      = "sphinx"
html_theme          = "sphinx_rtd_theme"
html_static_path    = []
html_show_sourcelink = False
htmlhelp_basename   = "CombConductordoc"

man_pages = [(master_doc, "combconductor", "CombConductor Documentation", [author], 1)]
