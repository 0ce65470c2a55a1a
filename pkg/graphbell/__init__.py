"""Bell inequalities from graph-state stabilizers."""

__version__ = "0.3.1"
