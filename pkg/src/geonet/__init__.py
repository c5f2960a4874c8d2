"""Neural-network building blocks with geometric activations, and gap-encoded graph storage."""

__version__ = "0.1.0"
