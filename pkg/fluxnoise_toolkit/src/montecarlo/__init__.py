"""Random-field Monte Carlo oracle."""
