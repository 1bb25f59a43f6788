"""Modular-variable phase-space toolkit: Zak transforms, cylinder Wigner
distributions, GKP error correction and modular tomography."""

__version__ = "1.0.0"
