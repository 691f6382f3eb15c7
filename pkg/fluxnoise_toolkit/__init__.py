"""
Flux-noise toolkit

Models spatially correlated magnetization noise threading single-loop and
gradiometric SQUID geometries, and the Ramsey dephasing it causes in
flux-tunable transmons.
"""

__version__ = "0.1.0"
