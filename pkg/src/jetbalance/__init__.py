"""Jet-bundle verification engine for kinematical states, dynamical states and balance laws."""
from jetbalance.expr import Expr, parse, render, differentiate, evaluate, substitute, simplify

__version__ = "0.1.0"
__all__ = ["Expr", "parse", "render", "differentiate", "evaluate", "substitute", "simplify"]
