"""Lagrangian DMD with piecewise-constant Koopman operators for time-dependent advection."""
