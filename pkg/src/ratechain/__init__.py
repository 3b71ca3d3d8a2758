"""Decentralized like/dislike rating on a miniature proof-of-work chain."""

__version__ = "0.1.0"
