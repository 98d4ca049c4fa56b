"""Time operator for the singular (Calogero-Sutherland) harmonic oscillator.

Numerical operator algebra built on su(1,1) generators, Barut-Girardello
coherent states and grid discretizations. Each subsystem lives in its own
module:

``specfun``        Gamma, modified Bessel functions, Gauss-Legendre rules
``operators``      matrix functions, bases and commutators
``su11_fock``      truncated Fock matrices of the su(1,1) generators
``bg_coherent``    Barut-Girardello coherent states
``time_operator``  coherent-state time operator and its commutator
``grid_rep``       momentum/position grid realizations
``report``         check/trend bookkeeping shared by all checks
``cli``            command-line suites and report files
"""

__version__ = "0.1.0"
