"""Strain-sensor fatigue detection for bicep curls."""
