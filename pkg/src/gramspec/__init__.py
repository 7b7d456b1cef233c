"""Facial structure of Gram spectrahedra of ternary quartics.

The pipeline computes the 28 bitangents of a smooth quartic, the 63 Steiner
complexes with their rank-3 Gram tensors, the Steiner graph on the eight
psd ones, one- and two-dimensional faces, extreme points of random linear
functionals and determinant slices of the Gram pencil.
"""
from __future__ import annotations

__version__ = "0.1.0"
