"""Dissipative quantum baker map: torus quantization, scar functions, and a thermal bath."""

__version__ = "0.1.0"
