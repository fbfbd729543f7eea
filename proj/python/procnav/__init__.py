"""Procedure navigation planning, execution and deviation analysis.

Plans and traces travel as the same text the CLI reads and writes; reports
come back as dicts.
"""

from pathlib import Path

from ._core import (
    Layout,
    ProcnavError,
    Service,
    aggregate_risk,
    analyze,
    estimate_hep,
    execute_sim,
    fitts_time,
    mann_whitney,
    parse_procedure,
    plan_procedure,
    risk_table,
    synthesize,
    tlx_score,
)

__version__ = "0.1.0"


def load_layout(path):
    return Layout(Path(path).read_text())


__all__ = [
    "Layout",
    "ProcnavError",
    "Service",
    "aggregate_risk",
    "analyze",
    "estimate_hep",
    "execute_sim",
    "fitts_time",
    "load_layout",
    "mann_whitney",
    "parse_procedure",
    "plan_procedure",
    "risk_table",
    "synthesize",
    "tlx_score",
]
