#!/usr/bin/env python3
"""
Rotascan - Entry Point
Loads .env and dispatches the command line
"""

import sys

from dotenv import load_dotenv

from rotascan.cli import cli_dispatch

if __name__ == "__main__":
    load_dotenv()
    sys.exit(cli_dispatch(sys.argv[1:]))
