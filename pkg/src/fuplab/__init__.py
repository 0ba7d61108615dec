"""Numerical experiments around fractal uncertainty bounds.

Submodules: ``regular_sets``, ``hilbert``, ``multiplier``, ``exponents``,
``discrete_fup``, ``baker``, ``krylov`` and ``harness`` (with the ``fuplab``
command line in ``cli``).
"""

__version__ = "0.1.0"
