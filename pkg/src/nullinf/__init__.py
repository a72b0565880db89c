"""Numerical tools for wave equations near null infinity.

Submodules: geometry, hamiltonian, flow, multiplier, wavesolver, normop, cli.
"""

__version__ = "0.1.0"
