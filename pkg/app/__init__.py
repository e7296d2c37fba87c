"""
lumpchain app package
Spectral discovery, the exhaustive oracle and trajectory diagnostics.
"""

__all__ = ['spectral', 'discovery', 'oracle', 'empirics']
