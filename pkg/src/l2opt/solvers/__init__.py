"""Reference optimizers for the system models."""
