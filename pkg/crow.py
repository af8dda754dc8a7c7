#!/usr/bin/env python3
"""
Entry point for running crow-entangle from a source checkout.
"""

import sys
from pathlib import Path

# Add the src directory to the Python path
src_path = Path(__file__).parent / "src"
sys.path.insert(0, str(src_path))

try:
    from crow_entangle.utils.cli import cli
except ImportError as e:
    print(f"Error importing crow-entangle: {e}")
    print("Please install the dependencies: pip install -r requirements.txt")
    sys.exit(1)

if __name__ == "__main__":
    cli()
