"""Model, numerics, and error contracts.

Ownership: computation and data structures. No environment access; the only file read is a CSV initial profile.
"""
