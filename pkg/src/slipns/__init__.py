"""Pseudospectral variable-density Navier-Stokes in a slip channel, with a
vanishing-viscosity convergence lab."""

__version__ = "0.1.0"
