"""Combinatorics of regular directed complexes and their morphism calculus."""

__version__ = "0.1.0"
