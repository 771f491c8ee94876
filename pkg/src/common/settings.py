"""
Runtime settings loaded from the environment (.env in the project root)
"""
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

project_root = Path(__file__).parent.parent.parent

load_dotenv(dotenv_path=project_root / '.env')


@dataclass(frozen=True)
class Settings:
    """Environment-level knobs; CLI flags take precedence"""
    workers: int
    log_level: str
    progress: bool


def _int_env(name: str) -> Optional[int]:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return None
    try:
        value = int(raw)
    except ValueError:
        return None
    return value if value > 0 else None


def load_settings(workers: Optional[int] = None, log_level: Optional[str] = None,
                  progress: Optional[bool] = None) -> Settings:
    """
    Resolve settings: explicit argument, then environment, then default

    Args:
        workers: --workers flag value
        log_level: --log-level flag value
        progress: --progress flag value

    Returns:
        Settings
    """
    resolved_workers = workers or _int_env("ANISOHEAT_WORKERS") or (os.cpu_count() or 1)
    resolved_level = (log_level or os.getenv("ANISOHEAT_LOG_LEVEL") or "INFO").upper()
    if progress is None:
        progress = os.getenv("ANISOHEAT_PROGRESS", "0").strip().lower() in {"1", "true", "yes"}
    return Settings(workers=int(resolved_workers), log_level=resolved_level, progress=bool(progress))
