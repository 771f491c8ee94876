"""
EstimateReport - named inequality check shared by all verification suites
"""
import math
from typing import Any, Dict, List, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field


class RatioSample(BaseModel):
    """One sampled ratio with the configuration that produced it"""
    tag: str = Field(..., description="Configuration tag, e.g. 't=1,r=0.5'")
    value: float = Field(..., description="Sampled ratio or quantity")


class EstimateReport(BaseModel):
    """Result of a numerical inequality check"""
    model_config = ConfigDict(
        populate_by_name=True,
        json_schema_extra={
            "example": {
                "name": "l2_contraction",
                "samples": [{"tag": "member=0", "value": 0.83}],
                "sup": 0.83,
                "refinement_delta": 0.0,
                "threshold": 1.000001,
                "delta_cap": None,
                "pass": True,
                "metadata": {},
            }
        },
    )

    name: str = Field(..., description="Name of the checked inequality")
    samples: List[RatioSample] = Field(default_factory=list, description="Sampled ratios with tags")
    sup: float = Field(..., description="Supremum over the samples")
    refinement_delta: float = Field(0.0, ge=0.0, description="Relative change of sup under grid refinement")
    threshold: Optional[float] = Field(None, description="Upper bound for sup; None means finiteness only")
    delta_cap: Optional[float] = Field(None, description="Cap on refinement_delta; None means unchecked")
    passed: bool = Field(..., alias="pass", description="sup within threshold and delta within cap")
    metadata: Dict[str, Any] = Field(default_factory=dict, description="Check specific extras")

    @staticmethod
    def verdict(sup: float, refinement_delta: float, threshold: Optional[float],
                delta_cap: Optional[float]) -> bool:
        """pass <=> sup finite, sup <= threshold and delta below its cap"""
        if not math.isfinite(sup):
            return False
        if threshold is not None and sup > threshold:
            return False
        if delta_cap is not None and not (math.isfinite(refinement_delta) and refinement_delta < delta_cap):
            return False
        return True

    @classmethod
    def evaluate(
        cls,
        name: str,
        samples: Sequence[RatioSample],
        refinement_delta: float = 0.0,
        threshold: Optional[float] = None,
        delta_cap: Optional[float] = None,
        sup: Optional[float] = None,
        metadata: Optional[Dict[str, Any]] = None,
    ) -> "EstimateReport":
        """
        Build a report and derive its pass flag

        Args:
            name: Check name
            samples: Tagged samples
            refinement_delta: Relative change under refinement
            threshold: Bound on sup (None: finiteness only)
            delta_cap: Bound on refinement_delta (None: unchecked)
            sup: Override for the supremum (defaults to max of samples, 0 if empty)
            metadata: Extra fields

        Returns:
            EstimateReport with `pass` set by the verdict rule
        """
        samples = list(samples)
        if sup is None:
            sup = max((s.value for s in samples), default=0.0)
            if any(not math.isfinite(s.value) for s in samples):
                sup = math.inf
        delta = float(refinement_delta) if math.isfinite(refinement_delta) else math.inf
        return cls(
            name=name,
            samples=samples,
            sup=float(sup),
            refinement_delta=delta,
            threshold=threshold,
            delta_cap=delta_cap,
            passed=cls.verdict(float(sup), delta, threshold, delta_cap),
            metadata=dict(metadata or {}),
        )

    def to_record(self, **extra: Any) -> Dict[str, Any]:
        """JSON-ready dict using the `pass` key, merged with extra top-level fields"""
        record = self.model_dump(mode="json", by_alias=True)
        record.update(extra)
        return record


def relative_delta(coarse: float, fine: float) -> float:
    """Relative change between a coarse and a refined supremum"""
    if not (math.isfinite(coarse) and math.isfinite(fine)):
        return math.inf
    scale = max(abs(coarse), abs(fine))
    if scale == 0.0:
        return 0.0
    return abs(fine - coarse) / scale
