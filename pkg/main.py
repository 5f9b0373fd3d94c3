#!/usr/bin/env python3
"""
rANS stack codec - Main Entry Point

A streaming range-variant ANS compressor that:
- Encodes byte streams with static or adaptive order-0 models
- Writes a bit-exact container format
- Reports compressed size against the codec's rate bound

Usage:
    python main.py compress INPUT [-o OUTPUT]
    python main.py decompress INPUT [-o OUTPUT]
    python main.py stats INPUT
    python main.py selftest

Requirements:
    - Python 3.10+
    - See requirements.txt for dependencies
"""
import sys
import os

# Add src directory to path
src_path = os.path.join(os.path.dirname(__file__), 'src')
sys.path.insert(0, src_path)

from src.cli import main as cli_main


def main():
    """Main entry point"""
    try:
        sys.exit(int(cli_main()))
    except KeyboardInterrupt:
        print("\nInterrupted.")
        sys.exit(130)
    except Exception as e:
        print(f"Error: {e}")
        sys.exit(1)


if __name__ == "__main__":
    main()
