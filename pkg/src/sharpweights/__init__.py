"""Exact step-function tools for sharp weighted norm inequalities."""

__version__ = "0.1.0"
