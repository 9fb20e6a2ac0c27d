# robinkit/__init__.py
# Numerical potential-theory toolkit: Robin functions, harmonic radii and reduced moduli.

__version__ = "1.0.0"
