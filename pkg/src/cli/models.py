"""
CLI Models - records written next to the numeric outputs and to stderr
"""
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field


class ErrorResponse(BaseModel):
    """Printed to stderr when a run stops on an error"""
    error: str = Field(..., description="Exception class")
    message: str = Field(..., description="Human readable message")
    details: Optional[Dict[str, Any]] = Field(None, description="Structured context")

    model_config = ConfigDict(json_schema_extra={
            "example": {
                "error": "ConfigValidationError",
                "message": "c1 <= a_i <= 1/c1: a_i outside [c1, 1/c1]",
                "details": {"constraint": "c1 <= a_i <= 1/c1", "block": 0, "min": 0.2, "max": 1.0}
            }
        })


class FileRecord(BaseModel):
    """One output file with its checksum"""
    path: str = Field(..., description="Path relative to the output directory")
    sha256: str = Field(..., description="Hex SHA-256 of the file bytes")
    bytes: int = Field(..., ge=0, description="File size")


class RunManifest(BaseModel):
    """Everything needed to reproduce and audit one run"""
    config_hash: str = Field(..., description="SHA-256 of the canonical config JSON")
    version: str = Field(..., description="Toolkit version")
    task: str = Field(..., description="Task that produced the outputs")
    seed: int = Field(..., ge=0, description="Master seed")
    passed: bool = Field(..., alias="pass", description="All checks of the run passed")
    timings: Dict[str, float] = Field(default_factory=dict, description="Wall-clock seconds per stage")
    files: List[FileRecord] = Field(default_factory=list, description="Output inventory")

    model_config = ConfigDict(
        populate_by_name=True,
        json_schema_extra={
            "example": {
                "config_hash": "9f2c...",
                "version": "1.0.0",
                "task": "solve",
                "seed": 0,
                "pass": True,
                "timings": {"build": 0.01, "solve": 0.12, "write": 0.02},
                "files": [{"path": "u.grid", "sha256": "ab12...", "bytes": 270336}]
            }
        },
    )

    def checksums(self) -> Dict[str, str]:
        return {f.path: f.sha256 for f in self.files}
