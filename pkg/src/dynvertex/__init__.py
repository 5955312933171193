"""Dynamical stochastic higher spin vertex models: special functions,
vertex weights, symmetric functions, particle-system samplers, moment
identities, and scaling-limit experiments."""

__version__ = "0.1.0"
