"""Put the project root on sys.path so tests import `src.*`"""
import sys
from pathlib import Path

project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))
