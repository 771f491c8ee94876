"""
Output files: grid binaries with JSON sidecars, reports, CSV tables and checksums
"""
import hashlib
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.common.errors import ArgumentError, ReportFileError
from src.operators.grid import GridFunction

logger = logging.getLogger(__name__)

GRID_DTYPE = "<f8"
SUMMARY_COLUMNS = ["suite", "metric", "value", "threshold", "pass"]
REPORT_SUFFIX = "_report.json"


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    return value


def write_json(path: Path, record: Dict[str, Any]) -> Path:
    """Sorted keys, two-space indent; non-finite floats are written as Infinity/NaN"""
    path.write_text(json.dumps(_jsonable(record), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.debug("Wrote %s", path)
    return path


def write_csv(path: Path, rows: Sequence[Dict[str, Any]], columns: Sequence[str]) -> Path:
    pd.DataFrame(list(rows), columns=list(columns)).to_csv(path, index=False, float_format="%.17g")
    logger.debug("Wrote %s (%d rows)", path, len(rows))
    return path


# ========== GRIDS ==========

def write_grid(path: Path, values: np.ndarray, axes: Dict[str, Any], field_kind: str,
               units: str) -> Tuple[Path, Path]:
    """
    Little-endian float64, row-major, plus `<name>.json` describing it

    Args:
        path: Binary file path
        values: Real array
        axes: axis_names, extents, counts (and optional extras) of the array
        field_kind: What the values are (e.g. "space_time", "paths")
        units: Free-text units note

    Returns:
        (binary path, sidecar path)
    """
    data = np.ascontiguousarray(np.real(values), dtype=GRID_DTYPE)
    if list(data.shape) != list(axes.get("counts", data.shape)):
        raise ArgumentError("sidecar counts do not match the array shape",
                            {"shape": list(data.shape), "counts": axes.get("counts")})
    path.write_bytes(data.tobytes(order="C"))
    sidecar = {
        **axes,
        "dtype": "float64",
        "byte_order": "little",
        "order": "C",
        "shape": list(data.shape),
        "field_kind": field_kind,
        "units": units,
    }
    side = write_json(path.with_name(path.name + ".json"), sidecar)
    return path, side


def write_grid_function(path: Path, u: GridFunction, units: str) -> Tuple[Path, Path]:
    axes = u.grid.sidecar() if u.kind.value == "space_time" else u.grid.spatial().sidecar()
    return write_grid(path, u.values, axes, u.kind.value, units)


def read_grid(path: Path) -> Tuple[np.ndarray, Dict[str, Any]]:
    """Array and sidecar written by write_grid"""
    sidecar = json.loads(path.with_name(path.name + ".json").read_text(encoding="utf-8"))
    values = np.fromfile(path, dtype=GRID_DTYPE).reshape(sidecar["shape"])
    return values, sidecar


# ========== CHECKSUMS ==========

def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def inventory(out_dir: Path, exclude: Iterable[str] = ()) -> List[Dict[str, Any]]:
    """Every file under out_dir (sorted) with its checksum"""
    skip = set(exclude)
    records = []
    for path in sorted(p for p in out_dir.rglob("*") if p.is_file()):
        rel = path.relative_to(out_dir).as_posix()
        if rel in skip:
            continue
        records.append({"path": rel, "sha256": sha256_file(path), "bytes": path.stat().st_size})
    return records


# ========== REPORTS ==========

def _rows(suite: str, record: Dict[str, Any], path: Path) -> List[Dict[str, Any]]:
    if "reports" in record:
        if not isinstance(record["reports"], list):
            raise ReportFileError(str(path), "'reports' must be a list")
        rows = []
        for child in record["reports"]:
            if not isinstance(child, dict):
                raise ReportFileError(str(path), "report entries must be objects")
            rows += _rows(suite, child, path)
        return rows
    missing = [key for key in ("name", "sup", "pass") if key not in record]
    if missing:
        raise ReportFileError(str(path), f"missing fields {missing}")
    label = record.get("label")
    metric = f"{record['name']}[{label}]" if label else record["name"]
    threshold = record.get("threshold")
    return [{"suite": suite, "metric": metric, "value": record["sup"],
             "threshold": math.nan if threshold is None else threshold, "pass": bool(record["pass"])}]


def read_report(path: Path) -> List[Dict[str, Any]]:
    """Summary rows of one `*_report.json` file"""
    try:
        record = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ReportFileError(str(path), str(e)) from e
    if not isinstance(record, dict):
        raise ReportFileError(str(path), "top level must be an object")
    return _rows(path.name[: -len(REPORT_SUFFIX)], record, path)


def report_render(out_dir: Path) -> Tuple[pd.DataFrame, bool]:
    """
    Merge every `*_report.json` under out_dir into summary.csv and digest.txt

    Args:
        out_dir: Output directory of one or more runs

    Returns:
        (summary table, True iff every row passed)

    Raises:
        ReportFileError: naming the malformed file
    """
    out_dir = Path(out_dir)
    if not out_dir.is_dir():
        raise ArgumentError("output directory does not exist", {"out": str(out_dir)})
    rows: List[Dict[str, Any]] = []
    for path in sorted(out_dir.glob(f"*{REPORT_SUFFIX}")):
        rows += read_report(path)
    table = pd.DataFrame(rows, columns=SUMMARY_COLUMNS)
    table.to_csv(out_dir / "summary.csv", index=False, float_format="%.17g")
    passed = bool(table["pass"].all()) if len(table) else True

    lines = [f"{'PASS' if row['pass'] else 'FAIL'}  {row['suite']:<10} {row['metric']:<40} "
             f"{row['value']:.6g}" + ("" if _is_nan(row["threshold"]) else f" <= {row['threshold']:.6g}")
             for row in rows]
    lines.append(f"overall: {'PASS' if passed else 'FAIL'} ({len(rows)} checks)")
    (out_dir / "digest.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info("Rendered %d report rows from %s: %s", len(rows), out_dir, "PASS" if passed else "FAIL")
    return table, passed


def _is_nan(value: Optional[float]) -> bool:
    return value is None or (isinstance(value, float) and math.isnan(value))
