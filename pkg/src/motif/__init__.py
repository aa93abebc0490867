"""Thermal affordance mapping and IMU flick classification for a multimodal
robotic hand, runnable on recorded or synthetic data."""

__version__ = "0.1.0"
