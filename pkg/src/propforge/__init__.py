"""propforge: turn structured natural-language descriptions of GUI behaviour
into executable test properties, grounded against captured app pages."""

__version__ = "0.1.0"
