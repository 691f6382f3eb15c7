#!/usr/bin/env python3
"""
Main entry point for the flux-noise toolkit.
"""

import sys

from fluxnoise_toolkit.src.cli import cli, run_command  # noqa: F401

if __name__ == "__main__":
    sys.exit(run_command())
