"""State-vector simulation of quantum algorithms for the kicked Harper map."""

__version__ = "0.1.0"
