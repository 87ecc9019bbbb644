"""Workbench for clarifying citizen-consultation corpora.

Turns noisy free-form contributions into structured argumentative units via
LLM backends, supports a human-in-the-loop annotation service, and implements
the evaluation stack: segmentation agreement, a censored-Beta model of
clarification quality, correction diagnostics, and judge-based clustering
comparison with significance tests.
"""

__version__ = "0.1.0"
