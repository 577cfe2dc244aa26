"""Sensing-interference physical layer security for vehicular ISAC networks."""
__version__ = "0.1.0"
