"""Uplink rate bounds, power scaling and energy/spectral-efficiency tradeoffs
for very large multiuser MIMO."""

__version__ = "0.1.0"
