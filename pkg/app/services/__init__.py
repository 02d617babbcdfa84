"""Service layer.

Ownership: environment settings and run-config loading.
"""
