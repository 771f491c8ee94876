"""
anisoheat - command line launcher

    python anisoheat.py solve --config configs/solve_constant.json --out runs/solve
"""
import sys
from pathlib import Path

# Add project root to path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from src.cli.main import main

if __name__ == "__main__":
    sys.exit(main())
