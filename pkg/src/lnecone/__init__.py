"""Empirical and symbolic probes of Lipschitz normal embedding, tangent cones and k_X."""

__version__ = "0.1.0"
