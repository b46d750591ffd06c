"""Attack scenario generation, fuzzing and passive reconnaissance."""

from .fuzz import FuzzCase, FuzzError, fuzz, mutate, replay_entry, run_campaign
from .generators import GENERATORS, generate
from .recon import Inventory, reconnaissance
from .runner import render_iq, write_outputs
from .scenario import (
    CATALOG,
    AttackScenario,
    FrameSchedule,
    JamSegment,
    ScenarioError,
    ScheduleEntry,
    load_config,
    scenario_from_dict,
)

__all__ = [
    "CATALOG",
    "GENERATORS",
    "AttackScenario",
    "FrameSchedule",
    "FuzzCase",
    "FuzzError",
    "Inventory",
    "JamSegment",
    "ScenarioError",
    "ScheduleEntry",
    "fuzz",
    "generate",
    "load_config",
    "mutate",
    "reconnaissance",
    "render_iq",
    "replay_entry",
    "run_campaign",
    "scenario_from_dict",
    "write_outputs",
]
