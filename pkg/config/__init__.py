"""Experiment configuration files for the SUTA toolkit."""
