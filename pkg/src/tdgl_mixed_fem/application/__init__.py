"""Application layer - Assembly, time stepping and the experiment harness."""
