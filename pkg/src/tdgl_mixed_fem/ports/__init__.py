"""Ports layer - Interfaces for solvers, observability and report persistence."""
