"""Tests for the SUTA toolkit."""
