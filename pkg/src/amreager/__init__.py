"""Transition-based AMR parsing, training and evaluation toolkit."""

from .graph import Alignment, AmrGraph, Edge, Fragment, Node, ROOT, Sentence
from .penman import parse_penman, serialize_penman

__all__ = [
    "Alignment",
    "AmrGraph",
    "Edge",
    "Fragment",
    "Node",
    "ROOT",
    "Sentence",
    "parse_penman",
    "serialize_penman",
]

__version__ = "0.1.0"
