"""Risk navigation engine: lane-graph map, path horizons, collision /
curve / regulatory risk evaluation, and HMI frame streaming."""

__version__ = "0.1.0"
