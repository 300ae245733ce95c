"""Domain layer - Meshes, finite element spaces, manufactured cases and scheme models."""
