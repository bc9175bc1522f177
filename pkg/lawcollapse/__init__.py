"""lawcollapse: law-invariant functionals on finitely supported distributions."""

__version__ = "0.1.0"
