"""
Schemas for sampled point clouds and gap reports.
"""
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class CloudLabel(str, Enum):
    DOMAIN = "domain"
    IMAGE = "image"
    VARIETY = "variety"


class PointCloud(BaseModel):
    """Sampled points with the bookkeeping needed to reproduce them."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    label: CloudLabel
    variables: Tuple[str, ...]
    points: np.ndarray = Field(..., description="Array of shape (n, len(variables))")
    seed: int
    candidates: int = Field(0, description="Points drawn before filtering")
    coverage_undecided: bool = Field(False, description="Set when no point survived filtering")

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    def restricted_to_branch(self, columns: List[int], values: List[float]) -> "PointCloud":
        mask = np.ones(self.size, dtype=bool)
        for column, value in zip(columns, values):
            mask &= np.abs(self.points[:, column] - value) <= 1e-9
        return self.model_copy(update={"points": self.points[mask]})


class GapVerdict(str, Enum):
    IMAGE_EQUALS_VARIETY = "ImageEqualsVariety"
    GAP_DETECTED = "GapDetected"


class SpuriousPoint(BaseModel):
    point: List[float]
    distance: float


class GapReport(BaseModel):
    """Variety points farther than delta from every sampled image point."""
    model_config = ConfigDict(frozen=True)

    verdict: GapVerdict
    variables: Tuple[str, ...]
    spurious: Tuple[SpuriousPoint, ...] = ()
    delta: float
    max_distance: float
    image_size: int
    variety_size: int
    image_seed: int
    variety_seed: int
    thresholds: Dict[str, float] = Field(default_factory=dict)

    @property
    def top(self) -> Optional[SpuriousPoint]:
        return self.spurious[0] if self.spurious else None
