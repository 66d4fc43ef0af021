"""Transformer fine-tuning sidecar for the evolog pipeline.

Trains review-relevance and log/review pair classifiers and exports
probabilities in the score-file formats the core imports.
"""

__version__ = "0.1.0"
