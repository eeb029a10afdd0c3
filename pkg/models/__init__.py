"""Models package"""
from .distributions import Axis, CondDist, FiniteDist, JointDist
from .toy_process import CalibrationReport, ToyProcess
from .params import Features, GradVector, Model, ModelParams, Provenance
from .config import AnnealSchedule, AdamSettings, Objective, ObjectiveKind, QxMode, SweepSpec, TrainConfig
from .reports import (
    BoundsReport,
    ClusterReport,
    DiagonalLine,
    Feasibility,
    Fig2Report,
    Frontier,
    RDPoint,
    TraceRecord,
    TrainTrace,
)

__all__ = [
    "Axis", "CondDist", "FiniteDist", "JointDist",
    "CalibrationReport", "ToyProcess",
    "Features", "GradVector", "Model", "ModelParams", "Provenance",
    "AnnealSchedule", "AdamSettings", "Objective", "ObjectiveKind", "QxMode", "SweepSpec", "TrainConfig",
    "BoundsReport", "ClusterReport", "DiagonalLine", "Feasibility", "Fig2Report", "Frontier",
    "RDPoint", "TraceRecord", "TrainTrace",
]
