"""Exact vertex-superalgebra computation: OPE engine, the N=2 superconformal
algebra, its universal W-infinity extension, truncation curves, SUSY Miura
free-field realizations, and level-rank fusion rings."""

__version__ = "0.1.0"
