"""Numerical laboratory for vertex regularity of shrinking backward parabolas.

Decides regularity or irregularity of the characteristic vertex (0,0) for
second-order semilinear heat flows and their fourth-order bi-harmonic
analogues, by three mutually cross-checking routes: classical integral
criteria, a reduced ODE for the leading Fourier coefficient, and direct
simulation of the rescaled problem on a fixed domain.
"""

__version__ = "0.1.0"

from . import funcs, spectral, blayer, criterion, petrovskii, pdesim

__all__ = ["blayer", "criterion", "funcs", "pdesim", "petrovskii",
           "spectral", "__version__"]
