"""Evaluation, benchmarking and sweep tooling."""
