#!/usr/bin/env python3
"""
CLI tool for front speeds of jumping and synchronizing particles.

Usage:
    python front_speeds.py speed --law exp --lambda 1 --mu 1
    python front_speeds.py simulate --law exp --lambda 0.2 --mu 0.6 --n 10000 --seed 1
    python front_speeds.py tws --lambda 4 --mu 1 --v 7
    python front_speeds.py reproduce-table --table 1

    If --out is not specified, outputs go to outputs/<subcommand>_<timestamp>/
"""

import os
import sys

# Add the package to Python path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from jumpsync.cli import dispatch


if __name__ == '__main__':
    sys.exit(dispatch(sys.argv[1:]))
