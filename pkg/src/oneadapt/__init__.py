"""Adaptive compiler and fusion-lattice tooling for photonic one-way computing."""

__version__ = "0.1.0"
