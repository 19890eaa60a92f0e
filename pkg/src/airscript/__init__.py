"""Air-written digit recognition from a wearable IMU stream."""

__version__ = "0.1.0"
