"""Ranking-preserving sentence embeddings: training losses, a desk-scale
encoder, frozen teacher stores, and ranking/correlation evaluation."""

__version__ = "0.1.0"
