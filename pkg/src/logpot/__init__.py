"""logpot: weighted logarithmic potential operators on rasterized domains.

Discretizes L_w u(x) = integral of log(w(x) w(y) / |x - y|) u(y) dy over a
bounded cell-center raster, exposes its spectrum, weighted transfinite
diameters and equilibrium measures, and the experiment battery behind
``logpot verify``.
"""

__version__ = "0.1.0"

__all__ = ["__version__"]
