"""Argument identification and sense classification for intra-sentential implicit discourse relations."""

__version__ = "0.1.0"
