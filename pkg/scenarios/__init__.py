"""Scenario configs, mesh builders, orchestration and output files."""
