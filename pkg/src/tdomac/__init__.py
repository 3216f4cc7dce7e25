"""Multi-agent soft actor-critic with a time-dynamical opponent model."""

__version__ = "0.1.0"
