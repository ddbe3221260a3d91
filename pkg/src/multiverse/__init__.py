"""Trace-based multiverse debugger with concolic path suggestion."""

from .wat import InstrId, Module, WatError, parse_module
from .vm import Environment, PrimitiveTable, ProgramState, classify, instantiate
from .concolic import Bounds, concolic, expand

__all__ = [
    "Bounds", "Environment", "InstrId", "Module", "PrimitiveTable",
    "ProgramState", "WatError", "classify", "concolic", "expand",
    "instantiate", "parse_module",
]
