"""Data generation, file formats, configuration and logging helpers."""
