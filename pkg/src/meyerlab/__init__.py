"""meyerlab: exact model sets, S-integer certification, covering certificates."""

__version__ = "0.1.0"
