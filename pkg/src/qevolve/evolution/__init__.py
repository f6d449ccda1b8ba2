"""Evolutionary search application: objectives, training, benchmarks and engine."""
