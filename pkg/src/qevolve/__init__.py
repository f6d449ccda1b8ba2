"""Tools for evolving and training parameterized quantum circuits."""

__version__ = '0.1.0'
