#!/usr/bin/env python3
"""
stablekit runner

Thin wrapper that calls the stablekit command line interface without installing the package.
"""

import os
import sys

# Add the current directory to the Python path
script_dir = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, script_dir)

if __name__ == "__main__":
    try:
        from stablekit.cli import main
    except ImportError as e:
        print("ERROR: Could not import stablekit package.", file=sys.stderr)
        print(f"Import error: {e}", file=sys.stderr)
        print(f"Debug: Script directory is {script_dir}", file=sys.stderr)
        sys.exit(1)
    sys.exit(main())
