"""Discrete-event simulator comparing a network-bound XR pipeline with a
predictive local space that is periodically calibrated by the remote agent."""

from .core import Pose, PoseSource, UnitQuaternion
from .errors import ConfigError, DuoSpaceError, ParseError
from .ingest import Scenario, load_scenario, load_scenario_file, load_trajectory
from .kinematics import KinematicChain, forward_kinematics, inverse_kinematics
from .metrics import FrameRecord, Report, RunTrace, latency_reduction, summarize
from .pipeline.graph import Mode
from .pipeline.simulation import run_simulation
from .spaces import MergeStrategy

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DuoSpaceError", "FrameRecord", "KinematicChain", "MergeStrategy", "Mode", "ParseError",
    "Pose", "PoseSource", "Report", "RunTrace", "Scenario", "UnitQuaternion", "forward_kinematics",
    "inverse_kinematics", "latency_reduction", "load_scenario", "load_scenario_file", "load_trajectory",
    "run_simulation", "summarize",
]
