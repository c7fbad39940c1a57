"""Benjamin-Ono pseudospectral simulation and virial diagnostics."""
