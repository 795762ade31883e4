"""Compiled kernels (optional, built from ``.pyx`` sources)."""
