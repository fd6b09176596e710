"""
Rotascan - Rotating-prism hyperspectral scanning and spectral sorting simulator
"""

__version__ = "1.0.0"
