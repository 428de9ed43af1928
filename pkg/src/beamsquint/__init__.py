"""Beam-squint aware beamforming and a street-level network simulator."""

__version__ = "0.1.0"
