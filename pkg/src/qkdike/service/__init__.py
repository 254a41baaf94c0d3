"""HTTP facade for the ETSI GS QKD 014 key-delivery API over a :class:`KmePair`."""

from .app import create_app

__all__ = ["create_app"]
