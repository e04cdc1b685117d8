"""Light-field video synthesis from monocular video."""

__version__ = "0.1.0"
