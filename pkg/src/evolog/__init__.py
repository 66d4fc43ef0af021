"""evolog: quantify the user-driven share of a mobile app's evolution.

The pipeline filters feature-relevant user reviews, matches them against
individual update-log entries by term-frequency cosine (or imported
semantic scores), and classifies each entry's time-aware feedback pattern
to compute developer-driven vs user-driven contribution rates.
"""

__version__ = "0.1.0"
