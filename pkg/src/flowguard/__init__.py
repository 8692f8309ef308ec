"""Out-of-distribution detection with small normalizing flows."""

from flowguard.detect import FlowOODDetector
from flowguard.flow import CouplingFlow, build_flow, load_flow, save_flow, train_flow

__version__ = "0.1.0"

__all__ = ["CouplingFlow", "FlowOODDetector", "build_flow", "load_flow", "save_flow", "train_flow"]
