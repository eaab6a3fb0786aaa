"""Radar yaw mounting-angle calibration from Doppler point clouds and IMU yaw rate."""

__version__ = "0.1.0"
