"""Learning vector fields on embedded manifolds with the spectral exterior calculus."""

__version__ = "0.1.0"
