"""Learning first-order definable concepts over structures of small degree, with local access only."""

__version__ = "0.1.0"
