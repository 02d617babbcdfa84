"""Application runtime package."""
