"""Planning and simulation workbench for split-face laser treatment studies."""

__version__ = "0.1.0"
