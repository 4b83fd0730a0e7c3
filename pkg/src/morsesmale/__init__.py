"""Numerical analysis of Morse-Smale diffeomorphisms of surfaces."""
from __future__ import annotations

from .catalog import CATALOG, ExampleCatalogEntry, get_entry
from .errors import MorseSmaleError, OutOfScope
from .pipeline import AnalysisOptions, AnalysisReport, emit_outputs, run_analyze, run_verify_theorem
from .surface import MapSpec, SurfaceModel, SurfacePoint

__version__ = "0.1.0"

__all__ = [
    "CATALOG", "ExampleCatalogEntry", "get_entry", "MorseSmaleError", "OutOfScope",
    "AnalysisOptions", "AnalysisReport", "emit_outputs", "run_analyze", "run_verify_theorem",
    "MapSpec", "SurfaceModel", "SurfacePoint",
]
