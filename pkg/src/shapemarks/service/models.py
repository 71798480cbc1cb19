"""Pydantic request/response models for the HTTP service.

These mirror the on-disk formats: curves are arrays of [x, y] pairs with
implicit closure, patterns carry a rectangular window plus per-point curves.
"""

from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, Field

GroupName = Literal["shape", "size-shape", "orientation-shape"]
KGroupName = Literal["shape", "size-shape", "orientation-shape", "ground"]
CorrectionName = Literal["translational", "minus", "isotropic"]

Vertex = tuple[float, float]
CurvePoints = list[Vertex]
SeedValue = Union[int, list[int]]


class AlignmentModel(BaseModel):
    theta: float
    seed: int
    gamma: list[float] = Field(description="reparameterization grid function in radians")
    applied_scale: bool


class DistanceRequest(BaseModel):
    curve_a: CurvePoints = Field(min_length=3)
    curve_b: CurvePoints = Field(min_length=3)
    group: GroupName = "shape"
    grid_size: int = Field(100, ge=8, le=1024)


class DistanceResponse(BaseModel):
    distance: float
    group: GroupName
    grid_size: int
    alignment: AlignmentModel


class GeodesicRequest(DistanceRequest):
    steps: int = Field(5, ge=2, le=200)


class GeodesicResponse(BaseModel):
    distance: float
    group: GroupName
    curves: list[CurvePoints]


class MeanRequest(BaseModel):
    curves: list[CurvePoints] = Field(min_length=1)
    group: GroupName = "shape"
    grid_size: int = Field(100, ge=8, le=1024)


class MeanResponse(BaseModel):
    mean_curve: CurvePoints
    mean_srv: list[Vertex]
    dispersion: float
    group: GroupName
    objective_trace: list[float]
    alignments: list[AlignmentModel]
    aligned_curves: list[CurvePoints]


class PatternPointModel(BaseModel):
    x: float
    y: float
    curve: CurvePoints = Field(min_length=3)


class PatternModel(BaseModel):
    window: tuple[float, float, float, float] = Field(
        description="xmin, xmax, ymin, ymax"
    )
    points: list[PatternPointModel] = Field(min_length=1)


class EstimateKRequest(BaseModel):
    pattern: PatternModel
    group: KGroupName = "shape"
    correction: CorrectionName = "translational"
    r_max: Optional[float] = Field(None, gt=0)
    r_steps: int = Field(50, ge=1, le=2000)
    bandwidth: Optional[float] = Field(None, gt=0)
    grid_size: int = Field(100, ge=8, le=1024)


class KEstimateResponse(BaseModel):
    r: list[float]
    k: list[float]
    l: list[float]
    c_f: float
    bandwidth: float
    group: KGroupName
    correction: CorrectionName


class EnvelopeRequest(BaseModel):
    pattern: PatternModel
    group: GroupName = "shape"
    s: int = Field(2499, ge=19)
    alpha: float = Field(0.05, gt=0, lt=1)
    seed: SeedValue = 0
    correction: CorrectionName = "translational"
    r_max: Optional[float] = Field(None, gt=0)
    r_steps: int = Field(50, ge=1, le=2000)
    bandwidth: Optional[float] = Field(None, gt=0)
    grid_size: int = Field(100, ge=8, le=1024)
    include_permuted: bool = True


class EnvelopeResponse(BaseModel):
    r_grid: list[float]
    t_observed: list[float]
    l_h0: list[float]
    k_observed: list[float]
    pointwise_lo: list[float]
    pointwise_hi: list[float]
    k_pointwise_lo: list[float]
    k_pointwise_hi: list[float]
    deviation_proportion: float
    erl_p: float
    s: int
    seed: SeedValue
    alpha: float
    group: GroupName
    correction: CorrectionName
    c_f: float
    bandwidth: float
    t_permuted: Optional[list[list[float]]] = None


class MaternModel(BaseModel):
    scale: float = Field(0.5, gt=0)
    smoothness: float = Field(0.5, gt=0)
    range: float = Field(2.0, gt=0)


class IndepShapeCovModel(BaseModel):
    diag: float = Field(0.1, gt=0)
    common: float = Field(0.9, ge=0)


class ScenarioConfigModel(BaseModel):
    window: tuple[float, float, float, float] = (0.0, 4.0, 0.0, 4.0)
    intensity: float = Field(8.0, gt=0)
    dep_shape: bool = False
    dep_orientation: bool = False
    dep_size: bool = False
    matern: MaternModel = Field(default_factory=MaternModel)
    indep_shape_cov: IndepShapeCovModel = Field(default_factory=IndepShapeCovModel)
    scale_interval: tuple[float, float] = (0.2, 1.2)
    grid_size: int = Field(100, ge=8, le=1024)
    seed: SeedValue = 0


class SimulatePatternRequest(BaseModel):
    config: ScenarioConfigModel = Field(default_factory=ScenarioConfigModel)


class StudyRequest(BaseModel):
    scenarios: Union[Literal["all"], list[str]] = "all"
    replicates: int = Field(20, ge=2)
    s: int = Field(499, ge=19)
    seed: int = 0
    alpha: float = Field(0.05, gt=0, lt=1)
    config: ScenarioConfigModel = Field(default_factory=ScenarioConfigModel)
    groups: Optional[list[GroupName]] = None
    r_max: Optional[float] = Field(None, gt=0)
    r_steps: int = Field(50, ge=1, le=2000)
    correction: CorrectionName = "translational"
    threads: Optional[int] = Field(None, ge=1)


class StudyResponse(BaseModel):
    rows: list[dict]


class HealthResponse(BaseModel):
    status: str
    version: str
