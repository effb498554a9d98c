"""conelab: a numerical laboratory for low-energy resolvents on cones.

Modules build on one another roughly in this order:

* specfun       Gamma/Bessel evaluations and small-argument expansions
* index_algebra bookkeeping for (power, log-power) expansion index sets
* cone_model    exact-cone mode kernels and free resolvent sums
* radial_lab    radial ODE solves, zero-mode classification, Green kernels
* expansion_lab low-energy expansion fitting and coefficient checks
* riesz_lab     Riesz transform assembly and L^p threshold sweeps
* cli           deterministic command-line runner over the above
"""

__version__ = "0.1.0"

__all__ = [
    "specfun",
    "index_algebra",
    "cone_model",
    "radial_lab",
    "expansion_lab",
    "riesz_lab",
    "cli",
    "errors",
]
