"""Retrieval-augmented PDDL generation with solver feedback and refinement."""

__version__ = "0.1.0"
