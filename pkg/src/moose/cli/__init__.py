"""Command-line interface for MOOSE."""
