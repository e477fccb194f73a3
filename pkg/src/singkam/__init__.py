"""Order-doubling normalisation of perturbed Hamiltonians near the 2n-gon singularity."""
__version__ = "0.1.0"
