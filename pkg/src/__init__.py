"""SUTA toolkit - single-utterance test-time adaptation for CTC models."""

__version__ = "0.1.0"
