"""Maximum-lifetime routing trees for sensor-network queries."""

__version__ = "0.1.0"
