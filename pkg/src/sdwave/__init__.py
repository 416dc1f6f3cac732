"""Numerical laboratory for a 2D strongly damped wave equation on an annulus.

Library layout:

* :mod:`sdwave.weight`          closed-form weight function and its constants
* :mod:`sdwave.grid`            polar annulus, quadrature, discrete operators
* :mod:`sdwave.solver`          semi-implicit theta-scheme time integration
* :mod:`sdwave.energetics`      energies, weighted energies, data functionals
* :mod:`sdwave.inequality_lab`  interpolation-ratio samplers, budget monitors,
                                exponent calculus, convolution decay
* :mod:`sdwave.config`/:mod:`sdwave.cli`  INI configs, commands, CSV + figures
"""

from sdwave.weight import WeightParams, epsilon_window, rho_critical

__all__ = ["WeightParams", "epsilon_window", "rho_critical"]
__version__ = "0.1.0"
