"""Experiment orchestration over the domain modules."""
