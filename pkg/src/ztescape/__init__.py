"""Escape rates of a cubic metastable well coupled to a zero-temperature ohmic bath.

Submodules
----------
model      well parameters, harmonic orbits, action-angle variables
bath       ohmic spectral density, noise kernel, averaged coefficients
special    exponential integral and Laguerre functions
rates      closed-form, eigenvalue, flux-quadrature and tunneling rates
fpsolver   finite-volume energy-space Fokker-Planck solver
langevin   Langevin Monte Carlo with band-limited quantum noise
config, report, cli
           experiment configuration, orchestration and command line
"""

__version__ = "0.1.0"
