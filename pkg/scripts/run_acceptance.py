"""
Run every bundled config through the CLI, then repeat one with 1 and 8 workers and compare checksums

    python scripts/run_acceptance.py --out runs/acceptance
"""
import argparse
import json
import logging
import subprocess
import sys
from pathlib import Path
from typing import Dict, List

project_root = Path(__file__).parent.parent

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

REPRODUCIBILITY_CONFIG = "simulate_additive.json"


def run_config(config: Path, out: Path, workers: int) -> int:
    task = json.loads(config.read_text(encoding="utf-8"))["task"]
    cmd = [sys.executable, str(project_root / "anisoheat.py"), task,
           "--config", str(config), "--out", str(out), "--workers", str(workers)]
    logger.info("Running %s", " ".join(cmd[1:]))
    result = subprocess.run(cmd, capture_output=True, text=True, cwd=project_root)
    if result.returncode not in (0, 1):
        logger.error("%s exited with %d: %s", config.name, result.returncode, result.stderr.strip()[-2000:])
    return result.returncode


def checksums(out: Path) -> Dict[str, str]:
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    return {f["path"]: f["sha256"] for f in manifest["files"]}


def main(argv: List[str] = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
    parser.add_argument("--out", type=Path, default=project_root / "runs" / "acceptance")
    parser.add_argument("--configs", type=Path, default=project_root / "configs")
    parser.add_argument("--workers", type=int, default=4)
    args = parser.parse_args(argv)

    codes = {}
    for config in sorted(args.configs.glob("*.json")):
        codes[config.name] = run_config(config, args.out / config.stem, args.workers)

    config = args.configs / REPRODUCIBILITY_CONFIG
    runs = {}
    for workers in (1, 8):
        out = args.out / f"reproducibility_w{workers}"
        codes[f"{config.name} (workers={workers})"] = run_config(config, out, workers)
        runs[workers] = checksums(out) if (out / "manifest.json").exists() else {}
    identical = bool(runs[1]) and runs[1] == runs[8]

    width = max(len(name) for name in codes)
    for name, code in codes.items():
        verdict = {0: "PASS", 1: "FAIL"}.get(code, f"ERROR ({code})")
        print(f"{name:<{width}}  {verdict}")
    print(f"{'checksums identical for 1 and 8 workers':<{width}}  {'PASS' if identical else 'FAIL'}")
    return 0 if identical and all(code == 0 for code in codes.values()) else 1


if __name__ == "__main__":
    sys.exit(main())
