"""Microgrid retrofit design: stochastic sizing/siting MILP with islanding
resilience, internal-fault reliability costing, and a
column-and-constraint-generation solver."""

__version__ = "0.1.0"
