"""Galerkin-Petrov time stepping for the 2D nonstationary Stokes problem."""
