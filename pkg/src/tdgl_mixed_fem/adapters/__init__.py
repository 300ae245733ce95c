"""Adapters layer - Implementations of the port interfaces."""
