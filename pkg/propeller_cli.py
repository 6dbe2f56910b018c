"""
Command-Line Entry Point
Puts src/ on the import path and runs the batch CLI from src/cli/main.py.
"""

import sys
from pathlib import Path

# Add the src directory to the path
src_dir = Path(__file__).parent / "src"
sys.path.insert(0, str(src_dir))

from cli.main import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
