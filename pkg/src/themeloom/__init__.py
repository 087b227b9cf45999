"""Staged thematic-analysis pipeline: coding, deduplication, theming, quote audit."""

__version__ = "0.1.0"
