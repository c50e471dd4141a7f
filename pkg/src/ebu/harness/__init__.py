"""Experiment harness: config files, metrics, seeded runs and the reproduction suites."""
