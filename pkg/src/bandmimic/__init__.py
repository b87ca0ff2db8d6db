"""Band-limited mimicry of point processes on the line and on lattices."""

__version__ = "0.1.0"
