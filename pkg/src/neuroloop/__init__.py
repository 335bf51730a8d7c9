"""Event-driven neuromorphic processor emulator, neural fields and closed-loop agents."""

__version__ = "0.1.0"
